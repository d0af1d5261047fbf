use thiserror::Error;

/// Errors produced by the sparse attention pipeline and its models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("alignment error: {what} = {value} is not a multiple of {multiple}")]
    Alignment {
        what: &'static str,
        value: usize,
        multiple: usize,
    },

    #[error("malformed nibble 0x{nibble:x} at index {index}")]
    MalformedNibble { nibble: u8, index: usize },

    #[error(
        "block mask grid {got_rows}x{got_cols} does not match tile grid {want_rows}x{want_cols}"
    )]
    MaskGrid {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("row {0} has no kept entries")]
    EmptyRow(usize),

    #[error("{0} requires a logical layout")]
    Layout(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("container error: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, SparseError>;

pub(crate) fn shape(msg: impl Into<String>) -> SparseError {
    SparseError::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> SparseError {
    SparseError::Domain(msg.into())
}
