use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use nmsparse::DenseMatrix;

use crate::error::CliError;

/// CSV writer over `path`, or stdout when `None`.
pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), CliError> {
    let mut w = csv_writer(Some(path))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|&v| num(v)))?;
    }
    w.flush()?;
    Ok(())
}
