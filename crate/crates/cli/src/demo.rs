use nmsparse::random::gaussian_inputs;
use nmsparse::{approx_error, attention_heatmap, dfss_attention_detailed, full_attention};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::CliError;
use crate::output::write_matrix;
use crate::DemoArgs;

const ROW_SUM_TOL: f64 = 1e-12;

pub fn run(args: &DemoArgs) -> Result<(), CliError> {
    if args.heads == 0 {
        return Err(CliError::usage("--heads must be at least 1"));
    }
    if let Some(dir) = &args.dump_heatmaps {
        std::fs::create_dir_all(dir)?;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let mut failures = Vec::new();
    for h in 0..args.heads {
        let inputs = gaussian_inputs(&mut rng, args.n, args.d).map_err(CliError::usage)?;
        let sparse = dfss_attention_detailed(&inputs, args.mode, None).map_err(CliError::usage)?;
        let full = full_attention(&inputs).map_err(CliError::failure)?;
        let err = approx_error(&full, &sparse.output).map_err(CliError::failure)?;

        let worst_row = (0..sparse.weights.rows())
            .map(|r| (sparse.weights.row_nonzeros(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let stochastic = worst_row <= ROW_SUM_TOL;
        let maps = attention_heatmap(&inputs, args.mode).map_err(CliError::failure)?;
        let violations = maps.domination_violations(ROW_SUM_TOL).len();

        println!(
            "head {h}: n={} d={} mode={} rel_l2={:.6e} max_abs={:.6e} dense_written={}",
            args.n, args.d, args.mode, err.rel_l2, err.max_abs, sparse.stats.dense_elems_written
        );
        println!(
            "head {h}: row-stochastic check {} (max |sum-1| = {worst_row:.2e})",
            if stochastic { "pass" } else { "FAIL" }
        );
        println!(
            "head {h}: kept-entry domination check {} ({violations} violations)",
            if violations == 0 { "pass" } else { "FAIL" }
        );
        if !stochastic {
            failures.push(format!("head {h} rows are not stochastic"));
        }
        if violations > 0 {
            failures.push(format!(
                "head {h} has {violations} kept weights below the dense ones"
            ));
        }
        if let Some(dir) = &args.dump_heatmaps {
            write_matrix(&dir.join(format!("head{h}_dense.csv")), &maps.dense)?;
            write_matrix(&dir.join(format!("head{h}_sparse.csv")), &maps.sparse)?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::failure(failures.join("; ")))
    }
}
