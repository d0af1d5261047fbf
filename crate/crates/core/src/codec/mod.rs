//! N:M group selection and the nonzeros + metadata compressed format.
//!
//! Every group occupies four 2-byte slots. Under [`SparsityMode::TwoOfFour`]
//! a group is four 16-bit elements of which two survive; under
//! [`SparsityMode::OneOfTwo`] it is two 32-bit elements (each spanning two
//! slots) of which one survives. The surviving slot pair `(i0, i1)` is
//! recorded as the nibble `i0 | i1 << 2`, so 1:2 groups only ever produce
//! `0x4` (slots 0,1) or `0xe` (slots 2,3).

pub mod container;
pub mod tile;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::block::BlockMask;
use crate::error::{shape, Result, SparseError};
use crate::tensor::DenseMatrix;

pub use tile::{interleaved_row, tile_layout_decode, tile_layout_encode, TILE_ROWS};

/// Which N:M pattern a matrix is pruned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsityMode {
    /// Keep the larger of every two consecutive 32-bit elements.
    OneOfTwo,
    /// Keep the two largest of every four consecutive 16-bit elements.
    TwoOfFour,
}

impl SparsityMode {
    /// 2-byte slots covered by one metadata nibble.
    pub const GROUP_SLOTS: usize = 4;

    /// Dense elements per group.
    pub fn group_len(self) -> usize {
        match self {
            Self::OneOfTwo => 2,
            Self::TwoOfFour => 4,
        }
    }

    /// Dense elements kept per group.
    pub fn kept_per_group(self) -> usize {
        match self {
            Self::OneOfTwo => 1,
            Self::TwoOfFour => 2,
        }
    }

    /// Slots occupied by one element.
    pub fn slots_per_element(self) -> usize {
        Self::GROUP_SLOTS / self.group_len()
    }

    /// Nibbles the mode may legally emit.
    pub fn admissible_nibbles(self) -> &'static [u8] {
        match self {
            Self::OneOfTwo => &[0x4, 0xe],
            Self::TwoOfFour => &[0x4, 0x8, 0xc, 0x9, 0xd, 0xe],
        }
    }

    pub fn admits(self, nibble: u8) -> bool {
        self.admissible_nibbles().contains(&nibble)
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Self::OneOfTwo => 1,
            Self::TwoOfFour => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Self::OneOfTwo),
            2 => Some(Self::TwoOfFour),
            _ => None,
        }
    }
}

impl fmt::Display for SparsityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneOfTwo => "1:2",
            Self::TwoOfFour => "2:4",
        })
    }
}

impl FromStr for SparsityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "1:2" | "one-of-two" => Ok(Self::OneOfTwo),
            "2:4" | "two-of-four" => Ok(Self::TwoOfFour),
            other => Err(format!(
                "unknown sparsity mode '{other}', expected 1:2 or 2:4"
            )),
        }
    }
}

/// Packs a strictly increasing slot pair into a metadata nibble.
#[inline]
pub fn encode_nibble(slot0: usize, slot1: usize) -> u8 {
    debug_assert!(slot0 < slot1 && slot1 < 4);
    (slot0 | slot1 << 2) as u8
}

/// Unpacks a nibble into its slot pair, or `None` if the pair is not
/// strictly increasing.
#[inline]
pub fn decode_nibble(nibble: u8) -> Option<(usize, usize)> {
    let (s0, s1) = ((nibble & 3) as usize, ((nibble >> 2) & 3) as usize);
    (nibble < 16 && s0 < s1).then_some((s0, s1))
}

/// Outcome of selecting the survivors of one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupSelection {
    kept: [usize; 2],
    count: usize,
    pub nibble: u8,
}

impl GroupSelection {
    /// Surviving element indices within the group, ascending.
    pub fn kept(&self) -> &[usize] {
        &self.kept[..self.count]
    }

    /// Surviving slot pair on the 4-slot grid.
    pub fn slots(&self) -> (usize, usize) {
        decode_nibble(self.nibble).expect("selection nibbles are well-formed")
    }
}

/// Selects the survivors of one group by signed value, lower index first on ties.
pub fn select_group(values: &[f64], mode: SparsityMode) -> Result<GroupSelection> {
    if values.len() != mode.group_len() {
        return Err(shape(format!(
            "{mode} groups have {} elements, got {}",
            mode.group_len(),
            values.len()
        )));
    }
    let nibble = group_nibble(values, mode);
    let (kept, count) = kept_elements(nibble, mode);
    Ok(GroupSelection {
        kept,
        count,
        nibble,
    })
}

/// Branch-free 2:4 selection: the pair with the largest sum, earliest pair
/// in lexicographic order on ties. Agrees with [`select_group`] whenever the
/// four values are distinct.
pub fn select_pair_by_sum(values: &[f64; 4]) -> (usize, usize) {
    const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut best = PAIRS[0];
    let mut best_sum = values[0] + values[1];
    for &(i, j) in &PAIRS[1..] {
        let s = values[i] + values[j];
        if s > best_sum {
            best = (i, j);
            best_sum = s;
        }
    }
    best
}

#[inline]
pub(crate) fn group_nibble(values: &[f64], mode: SparsityMode) -> u8 {
    match mode {
        SparsityMode::OneOfTwo => {
            if values[0] >= values[1] {
                0x4
            } else {
                0xe
            }
        }
        SparsityMode::TwoOfFour => {
            let mut first = 0;
            for i in 1..4 {
                if values[i] > values[first] {
                    first = i;
                }
            }
            let mut second = usize::from(first == 0);
            for i in 0..4 {
                if i != first && values[i] > values[second] {
                    second = i;
                }
            }
            encode_nibble(first.min(second), first.max(second))
        }
    }
}

/// Element indices kept by a well-formed nibble.
#[inline]
pub(crate) fn kept_elements(nibble: u8, mode: SparsityMode) -> ([usize; 2], usize) {
    let (s0, s1) = ((nibble & 3) as usize, (nibble >> 2) as usize);
    match mode {
        SparsityMode::OneOfTwo => ([s0 / 2, 0], 1),
        SparsityMode::TwoOfFour => ([s0, s1], 2),
    }
}

/// Prunes `values` (a whole number of groups) and appends the kept values and
/// their nibbles.
#[inline]
pub(crate) fn compress_segment(
    values: &[f64],
    mode: SparsityMode,
    nonzeros: &mut Vec<f64>,
    metadata: &mut Vec<u8>,
) {
    for group in values.chunks_exact(mode.group_len()) {
        let nibble = group_nibble(group, mode);
        let (kept, count) = kept_elements(nibble, mode);
        nonzeros.extend(kept[..count].iter().map(|&e| group[e]));
        metadata.push(nibble);
    }
}

/// Binary keep/drop mask over a dense matrix. Masks produced by
/// [`prune_dense`] keep exactly N of every M consecutive entries; masks built
/// with [`PruneMask::from_fn`] may follow any pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl PruneMask {
    pub fn from_fn(rows: usize, cols: usize, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..rows * cols).map(|t| keep(t / cols, t % cols)).collect();
        Self { rows, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_kept(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_density(&self, i: usize) -> f64 {
        self.row(i).iter().filter(|&&b| b).count() as f64 / self.cols as f64
    }

    pub fn density(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len() as f64
    }

    /// Whether every group of every row keeps exactly the mode's N entries.
    pub fn satisfies(&self, mode: SparsityMode) -> bool {
        self.cols.is_multiple_of(mode.group_len())
            && self
                .bits
                .chunks_exact(mode.group_len())
                .all(|g| g.iter().filter(|&&b| b).count() == mode.kept_per_group())
    }
}

fn check_group_alignment(cols: usize, mode: SparsityMode) -> Result<()> {
    if !cols.is_multiple_of(mode.group_len()) {
        return Err(SparseError::Alignment {
            what: "columns",
            value: cols,
            multiple: mode.group_len(),
        });
    }
    Ok(())
}

/// Zeroes the dropped entries of every group; returns the pruned matrix and mask.
pub fn prune_dense(m: &DenseMatrix, mode: SparsityMode) -> Result<(DenseMatrix, PruneMask)> {
    check_group_alignment(m.cols(), mode)?;
    let g = mode.group_len();
    let mut pruned = vec![0.0; m.rows() * m.cols()];
    let mut bits = vec![false; m.rows() * m.cols()];
    for (base, group) in m
        .data()
        .chunks_exact(g)
        .enumerate()
        .map(|(t, grp)| (t * g, grp))
    {
        let (kept, count) = kept_elements(group_nibble(group, mode), mode);
        for &e in &kept[..count] {
            pruned[base + e] = group[e];
            bits[base + e] = true;
        }
    }
    Ok((
        DenseMatrix::from_raw(m.rows(), m.cols(), pruned),
        PruneMask {
            rows: m.rows(),
            cols: m.cols(),
            bits,
        },
    ))
}

/// How the metadata stream is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Row-major, one nibble per group in column order.
    Logical,
    /// Reordered into the 32-row tile layout consumed by sparse GEMM kernels.
    TileInterleaved,
}

impl Layout {
    pub(crate) fn code(self) -> u8 {
        match self {
            Self::Logical => 0,
            Self::TileInterleaved => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Logical),
            1 => Some(Self::TileInterleaved),
            _ => None,
        }
    }
}

/// N:M compressed matrix: kept values row-major plus one nibble per group.
///
/// With a block mask attached, masked tiles are absent from both streams:
/// row `r` stores only the groups of the tiles its tile-row keeps, in column
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedSparse {
    rows: usize,
    dense_cols: usize,
    mode: SparsityMode,
    layout: Layout,
    nonzeros: Vec<f64>,
    metadata: Vec<u8>,
    blocks: Option<BlockMask>,
    row_ptr: Vec<usize>,
}

impl CompressedSparse {
    /// Validates and assembles a compressed matrix from its streams.
    pub fn from_parts(
        rows: usize,
        dense_cols: usize,
        mode: SparsityMode,
        layout: Layout,
        nonzeros: Vec<f64>,
        metadata: Vec<u8>,
        blocks: Option<BlockMask>,
    ) -> Result<Self> {
        check_group_alignment(dense_cols, mode)?;
        if let Some(mask) = &blocks {
            let (_, tile_cols) = mask.tile_shape(rows, dense_cols)?;
            check_group_alignment(tile_cols, mode)?;
            if layout == Layout::TileInterleaved {
                return Err(shape("tile-interleaved layout cannot carry a block mask"));
            }
        }
        let row_ptr = build_row_ptr(rows, dense_cols, mode, blocks.as_ref());
        let want_nz = row_ptr[rows];
        if nonzeros.len() != want_nz {
            return Err(shape(format!(
                "expected {want_nz} nonzeros, got {}",
                nonzeros.len()
            )));
        }
        let want_meta = want_nz / mode.kept_per_group();
        if metadata.len() != want_meta {
            return Err(shape(format!(
                "expected {want_meta} metadata nibbles, got {}",
                metadata.len()
            )));
        }
        if let Some(index) = nonzeros.iter().position(|v| !v.is_finite()) {
            return Err(SparseError::NonFinite { index });
        }
        if let Some((index, &nibble)) = metadata.iter().enumerate().find(|(_, &n)| !mode.admits(n))
        {
            return Err(SparseError::MalformedNibble { nibble, index });
        }
        let out = Self {
            rows,
            dense_cols,
            mode,
            layout,
            nonzeros,
            metadata,
            blocks,
            row_ptr,
        };
        if layout == Layout::TileInterleaved {
            tile::check_tile_aligned(&out)?;
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dense_cols(&self) -> usize {
        self.dense_cols
    }

    pub fn mode(&self) -> SparsityMode {
        self.mode
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn nonzeros(&self) -> &[f64] {
        &self.nonzeros
    }

    /// One nibble (value `0..16`) per byte.
    pub fn metadata(&self) -> &[u8] {
        &self.metadata
    }

    pub fn block_mask(&self) -> Option<&BlockMask> {
        self.blocks.as_ref()
    }

    /// Kept values of row `r`.
    pub fn row_nonzeros(&self, r: usize) -> &[f64] {
        &self.nonzeros[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Nibbles of row `r`; only meaningful in the logical layout.
    pub fn row_metadata(&self, r: usize) -> &[u8] {
        let k = self.mode.kept_per_group();
        &self.metadata[self.row_ptr[r] / k..self.row_ptr[r + 1] / k]
    }

    /// Dense column ranges stored for row `r`.
    pub fn row_segments(&self, r: usize) -> Vec<Range<usize>> {
        row_segments(r, self.dense_cols, self.blocks.as_ref(), self.rows)
    }

    /// `(column, value)` for every stored entry of row `r` (logical layout).
    pub fn row_entries(&self, r: usize) -> Result<Vec<(usize, f64)>> {
        if self.layout != Layout::Logical {
            return Err(SparseError::Layout("row access"));
        }
        let g = self.mode.group_len();
        let mut meta = self.row_metadata(r).iter();
        let mut vals = self.row_nonzeros(r).iter();
        let mut out = Vec::with_capacity(self.row_nonzeros(r).len());
        for seg in self.row_segments(r) {
            for base in seg.step_by(g) {
                let (kept, count) =
                    kept_elements(*meta.next().expect("metadata length checked"), self.mode);
                for &e in &kept[..count] {
                    out.push((base + e, *vals.next().expect("nonzero length checked")));
                }
            }
        }
        Ok(out)
    }

    /// Same structure with the kept values replaced.
    pub(crate) fn with_nonzeros(&self, nonzeros: Vec<f64>) -> Self {
        debug_assert_eq!(nonzeros.len(), self.nonzeros.len());
        Self {
            nonzeros,
            ..self.clone()
        }
    }

    pub(crate) fn into_layout(self, layout: Layout, metadata: Vec<u8>) -> Self {
        Self {
            layout,
            metadata,
            ..self
        }
    }

    /// Bits of the nonzeros + metadata payload when each value is stored in
    /// `element_bits` bits.
    pub fn payload_bits(&self, element_bits: u64) -> u64 {
        self.nonzeros.len() as u64 * element_bits + self.metadata.len() as u64 * 4
    }

    /// Bits of the dense matrix this one was compressed from.
    pub fn dense_bits(&self, element_bits: u64) -> u64 {
        (self.rows * self.dense_cols) as u64 * element_bits
    }
}

fn row_segments(
    r: usize,
    cols: usize,
    blocks: Option<&BlockMask>,
    rows: usize,
) -> Vec<Range<usize>> {
    match blocks {
        #[allow(clippy::single_range_in_vec_init)]
        None => vec![0..cols],
        Some(mask) => {
            let tile_rows = rows / mask.grid_rows();
            let tile_cols = cols / mask.grid_cols();
            (0..mask.grid_cols())
                .filter(|&tc| mask.is_kept(r / tile_rows, tc))
                .map(|tc| tc * tile_cols..(tc + 1) * tile_cols)
                .collect()
        }
    }
}

fn build_row_ptr(
    rows: usize,
    cols: usize,
    mode: SparsityMode,
    blocks: Option<&BlockMask>,
) -> Vec<usize> {
    let mut ptr = Vec::with_capacity(rows + 1);
    ptr.push(0);
    let mut acc = 0;
    for r in 0..rows {
        let stored: usize = row_segments(r, cols, blocks, rows)
            .iter()
            .map(|s| s.len())
            .sum();
        acc += stored / mode.group_len() * mode.kept_per_group();
        ptr.push(acc);
    }
    ptr
}

/// Prunes and compresses `m` into the logical layout.
pub fn compress_logical(m: &DenseMatrix, mode: SparsityMode) -> Result<CompressedSparse> {
    check_group_alignment(m.cols(), mode)?;
    let n = m.rows() * m.cols();
    let mut nonzeros = Vec::with_capacity(n / 2);
    let mut metadata = Vec::with_capacity(n / mode.group_len());
    compress_segment(m.data(), mode, &mut nonzeros, &mut metadata);
    CompressedSparse::from_parts(
        m.rows(),
        m.cols(),
        mode,
        Layout::Logical,
        nonzeros,
        metadata,
        None,
    )
}

/// Scatters the kept values back into a dense matrix; pruned and masked
/// positions are zero.
pub fn decompress(c: &CompressedSparse) -> Result<DenseMatrix> {
    if c.layout() == Layout::TileInterleaved {
        return decompress(&tile_layout_decode(c)?);
    }
    let mut out = DenseMatrix::zeros(c.rows(), c.dense_cols());
    for r in 0..c.rows() {
        let row = out.row_mut(r);
        for (j, v) in c.row_entries(r)? {
            row[j] = v;
        }
    }
    Ok(out)
}
