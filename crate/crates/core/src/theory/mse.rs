//! Mean squared error of the softmax kernel `SM(q, k) = exp(q.k / sqrt d)`
//! under 1:2 pruning against a random neighbouring key, and the
//! orthogonal-positive-random-feature (Performer) upper bound.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::quality::McEstimate;
use super::special::erfc;
use crate::error::{domain, shape, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `SM^2 (1 - erf(sqrt(d) ln SM / (|q| sqrt 2))) / 2`: the kernel value is
/// lost whenever the neighbour `k' ~ N(0, I)` scores higher.
pub fn mse_sm12(sm: f64, q_norm: f64, d: f64) -> Result<f64> {
    positive("SM", sm)?;
    positive("|q|", q_norm)?;
    positive("d", d)?;
    let arg = d.sqrt() * sm.ln() / (q_norm * std::f64::consts::SQRT_2);
    Ok(sm * sm * erfc(arg) / 2.0)
}

/// `(1/m) SM^2 [exp((|q|^2 + |k|^2) / sqrt d) SM^2 - 1 - (1 - 1/m) 2/(d+2)]`.
pub fn mse_performer_bound(sm: f64, q_norm: f64, k_norm: f64, m: f64, d: f64) -> Result<f64> {
    positive("SM", sm)?;
    positive("|q|", q_norm)?;
    positive("|k|", k_norm)?;
    positive("m", m)?;
    positive("d", d)?;
    let growth = ((q_norm * q_norm + k_norm * k_norm) / d.sqrt()).exp();
    Ok(sm * sm / m * (growth * sm * sm - 1.0 - (1.0 - 1.0 / m) * 2.0 / (d + 2.0)))
}

/// Monte-Carlo estimate of the 1:2 kernel MSE: draws `k' ~ N(0, I_d)` and
/// averages the squared error of the estimator that keeps `SM(q, k)` only
/// when `q.k > q.k'`.
pub fn mc_mse_sm12(q: &[f64], k: &[f64], samples: usize, seed: u64) -> Result<McEstimate> {
    if q.len() != k.len() || q.is_empty() {
        return Err(shape("q and k must be non-empty and of equal length"));
    }
    if samples < 2 {
        return Err(domain("need at least 2 samples"));
    }
    let d = q.len() as f64;
    let qk: f64 = q.iter().zip(k).map(|(a, b)| a * b).sum();
    let sm = (qk / d.sqrt()).exp();
    let err_sq = sm * sm;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let qk_prime: f64 = q
            .iter()
            .map(|&qi| {
                let z: f64 = StandardNormal.sample(&mut rng);
                qi * z
            })
            .sum::<f64>();
        if qk <= qk_prime {
            hits += 1;
        }
    }
    let h = hits as f64;
    Ok(McEstimate::from_moments(
        h * err_sq,
        h * err_sq * err_sq,
        samples,
    ))
}
