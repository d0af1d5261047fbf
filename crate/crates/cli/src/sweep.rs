use nmsparse::random::gaussian_matrix;
use nmsparse::theory::{
    empirical_quality, fixed_mask, quality_fixed, quality_nm, quality_topk, topk_mask,
};
use nmsparse::{prune_dense, DenseMatrix, PruneMask, Result as SparseResult, SparsityMode};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::CliError;
use crate::output::{csv_writer, num};
use crate::SweepArgs;

#[derive(Clone, Copy)]
enum Pattern {
    TopK,
    Fixed,
    Nm(SparsityMode),
}

impl Pattern {
    fn name(self) -> String {
        match self {
            Pattern::TopK => "topk".into(),
            Pattern::Fixed => "fixed".into(),
            Pattern::Nm(mode) => mode.to_string(),
        }
    }

    fn theory(self, s: f64, p_sigma: f64) -> SparseResult<f64> {
        match self {
            Pattern::TopK => quality_topk(s, p_sigma),
            Pattern::Fixed => quality_fixed(s),
            Pattern::Nm(mode) => quality_nm(p_sigma, mode).map(|q| q.value),
        }
    }

    fn mask(self, weights: &DenseMatrix, s: f64) -> SparseResult<PruneMask> {
        let k = (s * weights.cols() as f64).round() as usize;
        match self {
            Pattern::TopK => Ok(topk_mask(weights, k)),
            Pattern::Fixed => Ok(fixed_mask(weights.rows(), weights.cols(), k)),
            Pattern::Nm(mode) => prune_dense(weights, mode).map(|(_, mask)| mask),
        }
    }
}

/// Row softmax of `N(0, sigma^2)` scores.
fn sample_weights(rng: &mut ChaCha20Rng, n: usize, sigma: f64) -> SparseResult<DenseMatrix> {
    let scores = gaussian_matrix(rng, n, n, 0.0, sigma)?;
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        let row = scores.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = data.len();
        data.extend(row.iter().map(|v| (v - max).exp()));
        let total: f64 = data[start..].iter().sum();
        data[start..].iter_mut().for_each(|v| *v /= total);
    }
    DenseMatrix::new(n, n, data)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    if args.samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    if args.n == 0 || !args.n.is_multiple_of(4) {
        return Err(CliError::usage(format!(
            "--n must be a positive multiple of 4, got {}",
            args.n
        )));
    }
    for &s in &args.densities {
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::usage(format!(
                "densities must lie in (0, 1), got {s}"
            )));
        }
    }
    let p_sigma = args.p * args.sigma;

    let mut cells: Vec<(Pattern, f64)> = Vec::new();
    for &s in &args.densities {
        cells.push((Pattern::TopK, s));
        cells.push((Pattern::Fixed, s));
    }
    cells.push((Pattern::Nm(SparsityMode::OneOfTwo), 0.5));
    cells.push((Pattern::Nm(SparsityMode::TwoOfFour), 0.5));
    let theory = cells
        .iter()
        .map(|&(pat, s)| pat.theory(s, p_sigma))
        .collect::<SparseResult<Vec<_>>>()
        .map_err(CliError::usage)?;

    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let mut empirical = vec![Vec::with_capacity(args.samples); cells.len()];
    for _ in 0..args.samples {
        let weights = sample_weights(&mut rng, args.n, args.sigma).map_err(CliError::usage)?;
        for (slot, &(pat, s)) in empirical.iter_mut().zip(&cells) {
            let mask = pat.mask(&weights, s).map_err(CliError::failure)?;
            slot.push(empirical_quality(&weights, &mask, args.p).map_err(CliError::failure)?);
        }
    }

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["pattern", "s", "theory", "empirical_mean", "empirical_std"])?;
    for ((&(pat, s), th), xs) in cells.iter().zip(theory).zip(&empirical) {
        let (mean, std) = mean_std(xs);
        w.write_record([pat.name(), num(s), num(th), num(mean), num(std)])?;
    }
    w.flush()?;
    Ok(())
}
