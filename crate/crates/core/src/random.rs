//! Seeded Gaussian inputs.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Result};
use crate::tensor::{AttentionInputs, DenseMatrix};

/// `rows x cols` matrix of i.i.d. `N(mean, std)` draws, row-major.
pub fn gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    mean: f64,
    std: f64,
) -> Result<DenseMatrix> {
    let dist = Normal::new(mean, std).map_err(|e| domain(e.to_string()))?;
    DenseMatrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| dist.sample(rng)).collect(),
    )
}

/// Q, K, V with i.i.d. standard normal entries, drawn in that order.
pub fn gaussian_inputs<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
) -> Result<AttentionInputs> {
    let q = gaussian_matrix(rng, n, d, 0.0, 1.0)?;
    let k = gaussian_matrix(rng, n, d, 0.0, 1.0)?;
    let v = gaussian_matrix(rng, n, d, 0.0, 1.0)?;
    AttentionInputs::new(q, k, v)
}
