//! L^p ticket quality: how much of each row's p-th power attention mass a
//! mask keeps, in closed form under i.i.d. Gaussian scores and empirically.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::special::{erf, erfinv};
use crate::codec::{PruneMask, SparsityMode};
use crate::error::{domain, shape, Result, SparseError};
use crate::tensor::DenseMatrix;

/// Default task exponent `p` for quality sweeps.
pub const ANCHOR_P: f64 = 6.5;

/// Parameters of the Gaussian score model: scores ~ N(mu, sigma), density s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityParams {
    pub p: f64,
    pub sigma: f64,
    pub mu: f64,
    pub s: f64,
}

impl QualityParams {
    pub fn new(p: f64, sigma: f64, mu: f64, s: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(domain(format!("p must be >= 0, got {p}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("sigma must be > 0, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(domain("mu must be finite"));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(domain(format!("density must lie in (0, 1], got {s}")));
        }
        Ok(Self { p, sigma, mu, s })
    }

    pub fn p_sigma(&self) -> f64 {
        self.p * self.sigma
    }
}

fn check_p_sigma(p_sigma: f64) -> Result<()> {
    if !(p_sigma >= 0.0 && p_sigma.is_finite()) {
        return Err(domain(format!("p*sigma must be >= 0, got {p_sigma}")));
    }
    Ok(())
}

/// Quality of keeping the top `s` fraction of each row:
/// `(1 + erf(p sigma / sqrt 2 - erfinv(1 - 2s))) / 2`.
pub fn quality_topk(s: f64, p_sigma: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("top-k density must lie in (0, 1), got {s}")));
    }
    check_p_sigma(p_sigma)?;
    Ok((1.0 + erf(p_sigma / std::f64::consts::SQRT_2 - erfinv(1.0 - 2.0 * s)?)) / 2.0)
}

/// Quality of a fixed, input-independent pattern of density `s`: exactly `s`.
pub fn quality_fixed(s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(domain(format!("density must lie in (0, 1], got {s}")));
    }
    Ok(s)
}

/// Closed-form N:M quality. Exact for 1:2; for 2:4 the same value is a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmQuality {
    pub value: f64,
    pub is_lower_bound: bool,
}

/// `(1 + erf(p sigma / 2)) / 2`.
pub fn quality_nm(p_sigma: f64, mode: SparsityMode) -> Result<NmQuality> {
    check_p_sigma(p_sigma)?;
    Ok(NmQuality {
        value: (1.0 + erf(p_sigma / 2.0)) / 2.0,
        is_lower_bound: mode == SparsityMode::TwoOfFour,
    })
}

/// `(1/rows) sum_rows sum (mask . A)^p / sum A^p`.
pub fn empirical_quality(a: &DenseMatrix, mask: &PruneMask, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("p must be > 0, got {p}")));
    }
    if a.rows() != mask.rows() || a.cols() != mask.cols() {
        return Err(shape(format!(
            "weights {}x{} vs mask {}x{}",
            a.rows(),
            a.cols(),
            mask.rows(),
            mask.cols()
        )));
    }
    if a.rows() == 0 {
        return Err(shape("empty matrix"));
    }
    let mut total = 0.0;
    for i in 0..a.rows() {
        let (mut kept, mut all) = (0.0, 0.0);
        for (&w, &keep) in a.row(i).iter().zip(mask.row(i)) {
            if w < 0.0 {
                return Err(domain(format!("negative weight {w} in row {i}")));
            }
            let wp = w.powf(p);
            all += wp;
            if keep {
                kept += wp;
            }
        }
        if all == 0.0 {
            return Err(SparseError::EmptyRow(i));
        }
        total += kept / all;
    }
    Ok(total / a.rows() as f64)
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub(crate) fn from_moments(sum: f64, sum_sq: f64, samples: usize) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
            samples,
        }
    }

    /// `|mean - target|` in standard errors; exact agreement counts as 0.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = (self.mean - target).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.std_error
        }
    }
}

const MIN_MC_SAMPLES: usize = 100_000;

/// Monte-Carlo estimate of the N:M quality by sampling groups of i.i.d.
/// log-normal weights `exp(sigma Z)` and averaging the kept share of
/// `E[X^p]`. Each sample contributes `sum_kept exp(p sigma Z) / (M E[X^p])`,
/// whose mean is the quality; the `mu` shift cancels.
pub fn mc_quality_nm(
    p: f64,
    sigma: f64,
    mode: SparsityMode,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_p_sigma(p * sigma)?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(domain("sigma must be > 0"));
    }
    if samples < MIN_MC_SAMPLES {
        return Err(domain(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let ps = p * sigma;
    let norm = (ps * ps / 2.0).exp();
    let m = mode.group_len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut group = [0.0f64; 4];
    for _ in 0..samples {
        for g in group.iter_mut().take(m) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *g = (ps * z).exp();
        }
        let kept = match mode {
            SparsityMode::OneOfTwo => group[0].max(group[1]),
            SparsityMode::TwoOfFour => {
                let mut g = group;
                g.sort_unstable_by(|a, b| b.total_cmp(a));
                g[0] + g[1]
            }
        };
        let w = kept / (m as f64 * norm);
        sum += w;
        sum_sq += w * w;
    }
    Ok(McEstimate::from_moments(sum, sum_sq, samples))
}

/// Monte-Carlo estimate of the top-k quality integral: the share of
/// `E[exp(p sigma Z)]` carried by the largest `s` fraction of `samples`
/// standard normal draws. The cut-off is the empirical quantile of the draws,
/// so the estimate does not depend on `erfinv`.
pub fn mc_quality_topk(s: f64, p_sigma: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_p_sigma(p_sigma)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("top-k density must lie in (0, 1), got {s}")));
    }
    if samples < MIN_MC_SAMPLES {
        return Err(domain(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..samples)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let kept = ((s * samples as f64).round() as usize).clamp(1, samples);
    z.select_nth_unstable_by(samples - kept, f64::total_cmp);
    let shift = p_sigma * p_sigma / 2.0;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for &x in &z[samples - kept..] {
        let w = (p_sigma * x - shift).exp();
        sum += w;
        sum_sq += w * w;
    }
    Ok(McEstimate::from_moments(sum, sum_sq, samples))
}

/// Per-row top-`k` mask by signed value, lower index first on ties.
pub fn topk_mask(a: &DenseMatrix, k: usize) -> PruneMask {
    let k = k.min(a.cols());
    let mut keep = vec![false; a.rows() * a.cols()];
    let mut order: Vec<usize> = Vec::with_capacity(a.cols());
    for i in 0..a.rows() {
        let row = a.row(i);
        order.clear();
        order.extend(0..a.cols());
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        for &j in &order[..k] {
            keep[i * a.cols() + j] = true;
        }
    }
    PruneMask::from_fn(a.rows(), a.cols(), |i, j| keep[i * a.cols() + j])
}

/// Input-independent mask keeping the first `k` columns of every row.
pub fn fixed_mask(rows: usize, cols: usize, k: usize) -> PruneMask {
    PruneMask::from_fn(rows, cols, |_, j| j < k)
}
