//! Dense row-major matrices, the tiled scaled GEMM used for attention scores,
//! and the dense (unpruned) attention baseline.

use crate::error::{shape, Result, SparseError};

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps `data` as a `rows x cols` matrix, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape(format!(
                "data length {} != {rows} x {cols}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(SparseError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(shape("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Constructor for values already known to be finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| alpha * v).collect(),
        )
    }

    /// Plain `self * rhs` product with sequential accumulation.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Self::new(self.rows, rhs.cols, out)
    }

    /// Row sums, used for row-stochastic checks.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }
}

/// Query/key/value triple for a single attention head.
#[derive(Debug, Clone)]
pub struct AttentionInputs {
    pub q: DenseMatrix,
    pub k: DenseMatrix,
    pub v: DenseMatrix,
}

impl AttentionInputs {
    pub fn new(q: DenseMatrix, k: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        let (n, d) = (q.rows(), q.cols());
        if n == 0 || d == 0 {
            return Err(shape("attention inputs need n >= 1 and d >= 1"));
        }
        for (name, m) in [("K", &k), ("V", &v)] {
            if m.rows() != n || m.cols() != d {
                return Err(shape(format!(
                    "{name} is {}x{}, expected {n}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self { q, k, v })
    }

    pub fn seq_len(&self) -> usize {
        self.q.rows()
    }

    pub fn head_dim(&self) -> usize {
        self.q.cols()
    }

    /// The `1/sqrt(d)` score scale.
    pub fn score_scale(&self) -> f64 {
        1.0 / (self.head_dim() as f64).sqrt()
    }
}

/// Cache tiling for [`gemm_scaled`]. The accumulation order per output entry
/// is always k = 0..d sequentially, so any tiling yields identical bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GemmTiling {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub k_panel: usize,
}

impl Default for GemmTiling {
    fn default() -> Self {
        Self {
            tile_rows: 64,
            tile_cols: 64,
            k_panel: 32,
        }
    }
}

impl GemmTiling {
    fn validate(&self) -> Result<()> {
        if self.tile_rows == 0 || self.tile_cols == 0 || self.k_panel == 0 {
            return Err(shape("tile dimensions must be positive"));
        }
        Ok(())
    }
}

/// Computes one output tile of `scale * A B^T` into `acc`, which must hold
/// `rows.len() * cols.len()` values laid out row-major.
///
/// Shared by the dense GEMM and the fused prune kernel so both produce the
/// same bits for the same entry.
pub(crate) fn score_tile(
    a: &DenseMatrix,
    b: &DenseMatrix,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    k_panel: usize,
    scale: f64,
    acc: &mut [f64],
) {
    let width = cols.len();
    debug_assert_eq!(acc.len(), rows.len() * width);
    acc.fill(0.0);
    let depth = a.cols();
    let mut k0 = 0;
    while k0 < depth {
        let k1 = (k0 + k_panel).min(depth);
        for (ti, i) in rows.clone().enumerate() {
            let a_panel = &a.row(i)[k0..k1];
            for (tj, j) in cols.clone().enumerate() {
                let b_panel = &b.row(j)[k0..k1];
                let slot = &mut acc[ti * width + tj];
                for (x, y) in a_panel.iter().zip(b_panel) {
                    *slot += x * y;
                }
            }
        }
        k0 = k1;
    }
    for v in acc.iter_mut() {
        *v *= scale;
    }
}

/// `scale * A B^T` with the default tiling.
pub fn gemm_scaled(a: &DenseMatrix, b: &DenseMatrix, scale: f64) -> Result<DenseMatrix> {
    gemm_scaled_tiled(a, b, scale, GemmTiling::default())
}

/// `scale * A B^T`, walking output tiles in (tile-row, tile-col, k-panel) order.
pub fn gemm_scaled_tiled(
    a: &DenseMatrix,
    b: &DenseMatrix,
    scale: f64,
    tiling: GemmTiling,
) -> Result<DenseMatrix> {
    tiling.validate()?;
    if a.cols() != b.cols() {
        return Err(shape(format!(
            "inner dimensions differ: {} vs {}",
            a.cols(),
            b.cols()
        )));
    }
    let (n, m) = (a.rows(), b.rows());
    let mut out = vec![0.0; n * m];
    let mut tile = vec![0.0; tiling.tile_rows * tiling.tile_cols];
    for r0 in (0..n).step_by(tiling.tile_rows) {
        let r1 = (r0 + tiling.tile_rows).min(n);
        for c0 in (0..m).step_by(tiling.tile_cols) {
            let c1 = (c0 + tiling.tile_cols).min(m);
            let width = c1 - c0;
            let acc = &mut tile[..(r1 - r0) * width];
            score_tile(a, b, r0..r1, c0..c1, tiling.k_panel, scale, acc);
            for (ti, i) in (r0..r1).enumerate() {
                out[i * m + c0..i * m + c1].copy_from_slice(&acc[ti * width..(ti + 1) * width]);
            }
        }
    }
    DenseMatrix::new(n, m, out)
}

/// Numerically stable softmax of `row` in place: subtract the max, exponentiate,
/// normalize. Three passes over the cached row.
pub(crate) fn stable_softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Dense attention weights `softmax(Q K^T / sqrt(d))`.
pub fn attention_weights(inputs: &AttentionInputs) -> Result<DenseMatrix> {
    let mut scores = gemm_scaled(&inputs.q, &inputs.k, inputs.score_scale())?;
    for i in 0..scores.rows() {
        stable_softmax_in_place(scores.row_mut(i));
    }
    Ok(scores)
}

/// Full quadratic attention `softmax(Q K^T / sqrt(d)) V`.
pub fn full_attention(inputs: &AttentionInputs) -> Result<DenseMatrix> {
    attention_weights(inputs)?.matmul(&inputs.v)
}
