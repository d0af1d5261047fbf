//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p nmsparse --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nmsparse::container;
use nmsparse::theory::{
    empirical_quality, fixed_mask, fixed_nm_equal_density, mc_mse_sm12, mc_quality_nm, mse_sm12,
    performer_dense_crossover, performer_nm_crossover, performer_speedup, quality_nm, speedup_nm,
    speedup_nm_rational, speedup_topk_bound, topk_break_even_density, topk_nm_equal_density,
    CostModelParams,
};
use nmsparse::{
    approx_error, attention_heatmap, compress_logical, decompress, dfss_attention, full_attention,
    prune_dense, sddmm_prune, softmax_rows, spmm, tile_layout_decode, tile_layout_encode,
    AttentionInputs, CompressedSparse, Layout, SparsityMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use common::*;

const MODES: [SparsityMode; 2] = [SparsityMode::OneOfTwo, SparsityMode::TwoOfFour];

/// rel_l2 of 1:2 sparse vs full attention for the seeded n=256, d=64 inputs.
const PINNED_REL_L2: f64 = 0.425_778_540_684_359_8;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn codec_bijection() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (mut cases, mut tiled, mut bad) = (0, 0, Vec::new());
    for mode in MODES {
        let g = mode.group_len();
        for i in 0..10_000 {
            let aligned = i % 4 != 0;
            let (rows, cols) = if aligned {
                let unit = if mode == SparsityMode::OneOfTwo {
                    16
                } else {
                    32
                };
                (32 * rng.random_range(1..=2), unit * rng.random_range(1..=4))
            } else {
                (rng.random_range(1..=40), g * rng.random_range(1..=24))
            };
            let m = if i % 2 == 0 {
                normal_matrix(&mut rng, rows, cols)
            } else {
                tied_matrix(&mut rng, rows, cols)
            };
            let c = compress_logical(&m, mode).unwrap();
            let want = prune_oracle(&m, mode);
            let mut ok = bits_equal(&decompress(&c).unwrap(), &want);
            if aligned {
                let enc = tile_layout_encode(&c).unwrap();
                ok &= enc.layout() == Layout::TileInterleaved;
                ok &= tile_layout_decode(&enc).unwrap() == c;
                ok &= bits_equal(&decompress(&enc).unwrap(), &want);
                tiled += 1;
            }
            cases += 1;
            if !ok && bad.len() < 3 {
                bad.push(format!("{mode} {rows}x{cols} #{i}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{cases} matrices ({tiled} through the tile layout), mismatches: {bad:?}"),
    )
}

fn fusion_transparency() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut bad = Vec::new();
    let mut dense_written = 0;
    for i in 0..1000 {
        let mode = MODES[i % 2];
        let n = 4 * rng.random_range(1..=64);
        let d = rng.random_range(1..=64);
        let q = normal_matrix(&mut rng, n, d);
        let k = normal_matrix(&mut rng, n, d);
        let scale = 1.0 / (d as f64).sqrt();
        let (fused, stats) = sddmm_prune(&q, &k, mode, scale, None).unwrap();
        dense_written += stats.dense_elems_written;
        let scores = gemm_oracle(&q, &k, scale);
        let ok = fused == compress_logical(&scores, mode).unwrap()
            && bits_equal(&decompress(&fused).unwrap(), &prune_oracle(&scores, mode));
        if !ok && bad.len() < 3 {
            bad.push(format!("{mode} n={n} d={d}"));
        }
    }
    outcome(
        bad.is_empty() && dense_written == 0,
        format!("1000 instances, dense elements written {dense_written}, mismatches: {bad:?}"),
    )
}

fn spmm_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let mode = MODES[i % 2];
        let rows = rng.random_range(1..=96);
        let cols = mode.group_len() * rng.random_range(1..=32);
        let d = rng.random_range(1..=64);
        let a = compress_logical(&normal_matrix(&mut rng, rows, cols), mode).unwrap();
        let v = normal_matrix(&mut rng, cols, d);
        let got = spmm(&a, &v, None).unwrap();
        let want = matmul_oracle(&decompress(&a).unwrap(), &v);
        worst = worst.max(rel_max_diff(&got, &want));
    }
    outcome(
        worst <= 1e-12,
        format!("1000 instances, worst relative deviation {worst:.3e}"),
    )
}

fn shifted(c: &CompressedSparse, shifts: &[f64]) -> CompressedSparse {
    let mut nz = Vec::with_capacity(c.nonzeros().len());
    for (r, s) in shifts.iter().enumerate() {
        nz.extend(c.row_nonzeros(r).iter().map(|v| v + s));
    }
    CompressedSparse::from_parts(
        c.rows(),
        c.dense_cols(),
        c.mode(),
        c.layout(),
        nz,
        c.metadata().to_vec(),
        c.block_mask().cloned(),
    )
    .unwrap()
}

fn row_stochastic() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (mut worst_sum, mut worst_shift): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let mode = MODES[i % 2];
        let n = 4 * rng.random_range(1..=48);
        let d = rng.random_range(1..=64);
        let scale = rng.random_range(0.05..4.0);
        let (c, _) = sddmm_prune(
            &normal_matrix(&mut rng, n, d),
            &normal_matrix(&mut rng, n, d),
            mode,
            scale,
            None,
        )
        .unwrap();
        let sm = softmax_rows(&c).unwrap();
        for r in 0..n {
            worst_sum = worst_sum.max((sm.row_nonzeros(r).iter().sum::<f64>() - 1.0).abs());
        }
        let shifts: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let moved = softmax_rows(&shifted(&c, &shifts)).unwrap();
        for (a, b) in sm.nonzeros().iter().zip(moved.nonzeros()) {
            worst_shift = worst_shift.max((a - b).abs());
        }
    }
    outcome(
        worst_sum <= 1e-12 && worst_shift <= 1e-12,
        format!("200 matrices, max |row sum - 1| {worst_sum:.3e}, max shift deviation {worst_shift:.3e}"),
    )
}

fn quality_closed_forms() -> Outcome {
    let q12 = quality_nm(1.0, SparsityMode::OneOfTwo).unwrap().value;
    let mc12 = mc_quality_nm(1.0, 1.0, SparsityMode::OneOfTwo, 1_000_000, 5).unwrap();
    let mc24 = mc_quality_nm(1.0, 1.0, SparsityMode::TwoOfFour, 1_000_000, 6).unwrap();
    let z = mc12.z_score(q12);
    let pass = (q12 - 0.76025).abs() <= 1e-4 && z <= 3.0 && mc24.mean >= q12;
    outcome(
        pass,
        format!(
            "Q_1:2(1) = {q12:.6}, MC 1:2 = {:.6} ({z:.2} SE), MC 2:4 = {:.6} >= {q12:.6}",
            mc12.mean, mc24.mean
        ),
    )
}

fn empirical_convergence() -> Outcome {
    let n = 4096;
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let weights = softmax_oracle(&normal_matrix(&mut rng, n, n));
    let (_, mask) = prune_dense(&weights, SparsityMode::OneOfTwo).unwrap();
    let q12 = empirical_quality(&weights, &mask, 1.0).unwrap();
    drop(mask);
    let qfix = empirical_quality(&weights, &fixed_mask(n, n, n / 2), 1.0).unwrap();
    outcome(
        (q12 - 0.7602).abs() <= 0.01 && (qfix - 0.5).abs() <= 0.01,
        format!(
            "n={n}: 1:2 quality {q12:.5} (target 0.7602), fixed 50% quality {qfix:.5} (target 0.5)"
        ),
    )
}

fn crossover_pins() -> Outcome {
    let be = topk_break_even_density(64.0, 128.0).unwrap();
    let fixed = fixed_nm_equal_density(64.0, 128.0).unwrap();
    let topk = topk_nm_equal_density(64.0, 128.0).unwrap();
    let (num, den) = speedup_nm_rational(64, 128);
    let nm = speedup_nm(&CostModelParams::typical(1e6, 0.5))
        .unwrap()
        .asymptotic;
    let at_be = speedup_topk_bound(&CostModelParams::typical(1e6, be))
        .unwrap()
        .asymptotic;
    let pass = (be - 384.0 / 8512.0).abs() <= 1e-4
        && (at_be - 1.0).abs() <= 1e-12
        && (fixed - 0.63).abs() <= 0.01
        && (topk - 0.02).abs() <= 0.002
        && (num, den) == (10240, 6848)
        && nm == 10240.0 / 6848.0;
    outcome(
        pass,
        format!(
            "top-k break-even s={be:.6}, fixed=N:M at s={fixed:.4}, top-k=N:M at s={topk:.5}, N:M speedup {num}/{den} = {nm:.6}"
        ),
    )
}

fn performer_model() -> Outcome {
    let dense = performer_dense_crossover(64.0, 128.0, 266.0).unwrap();
    let nm = performer_nm_crossover(64.0, 128.0, 266.0).unwrap();
    let below = performer_speedup(&CostModelParams::typical(dense - 1.0, 1.0)).unwrap();
    let above = performer_speedup(&CostModelParams::typical(dense + 1.0, 1.0)).unwrap();
    let pass = (600.0..=750.0).contains(&dense)
        && (900.0..=1100.0).contains(&nm)
        && below < 1.0
        && above > 1.0;
    outcome(
        pass,
        format!("Performer beats dense at n={dense:.1}, matches N:M at n={nm:.1}"),
    )
}

fn mse_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut report = Vec::new();
    for d in [4usize, 16, 32, 64, 128] {
        let q: Vec<f64> = normal_matrix(&mut rng, 1, d).into_data();
        let k: Vec<f64> = normal_matrix(&mut rng, 1, d).into_data();
        let qk: f64 = q.iter().zip(&k).map(|(a, b)| a * b).sum();
        let q_norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sm = (qk / (d as f64).sqrt()).exp();
        let closed = mse_sm12(sm, q_norm, d as f64).unwrap();
        let mc = mc_mse_sm12(&q, &k, 1_000_000, 10 + d as u64).unwrap();
        let z = mc.z_score(closed);
        worst = worst.max(z);
        report.push(format!("d={d} {closed:.5}/{:.5}", mc.mean));
    }
    let exact = mse_sm12(1.0, 1.0, 64.0).unwrap() == 0.5;
    outcome(
        worst <= 3.0 && exact,
        format!(
            "worst {worst:.2} SE over [{}], MSE(SM=1) = 0.5 exactly: {exact}",
            report.join(", ")
        ),
    )
}

fn footprint() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let c = compress_logical(&normal_matrix(&mut rng, 64, 128), SparsityMode::OneOfTwo).unwrap();
    let dense = c.dense_bits(32);
    let payload = c.payload_bits(32);
    let bytes = container::to_bytes(&c).unwrap();
    let serialized = (bytes.len() - container::HEADER_LEN) as u64 * 8;
    let pass = payload * 16 == dense * 9
        && serialized == c.payload_bits(64)
        && container::from_bytes(&bytes).unwrap() == c;
    outcome(
        pass,
        format!("32-bit payload {payload} bits = {dense} x 9/16; f64 container payload {serialized} bits"),
    )
}

fn desk_scale_substitute() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let q = normal_matrix(&mut rng, 256, 64);
    let k = normal_matrix(&mut rng, 256, 64);
    let v = normal_matrix(&mut rng, 256, 64);
    let inputs = AttentionInputs::new(q, k, v).unwrap();
    let full = full_attention(&inputs).unwrap();
    let sparse = dfss_attention(&inputs, SparsityMode::OneOfTwo, None).unwrap();
    let rel = approx_error(&full, &sparse).unwrap().rel_l2;
    let mut violations = 0;
    for mode in MODES {
        violations += attention_heatmap(&inputs, mode)
            .unwrap()
            .domination_violations(1e-15)
            .len();
    }
    let pinned = (rel - PINNED_REL_L2).abs() <= 1e-9;
    outcome(
        pinned && violations == 0,
        format!(
            "GPU timings and model accuracy not reproducible here; rel_l2 = {rel:.17} (pinned {PINNED_REL_L2}), domination violations {violations}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("codec bijection", codec_bijection),
        ("fusion transparency", fusion_transparency),
        ("spmm oracle", spmm_oracle),
        ("row-stochasticity", row_stochastic),
        ("quality closed forms", quality_closed_forms),
        ("empirical quality convergence", empirical_convergence),
        ("crossover pins", crossover_pins),
        ("performer model", performer_model),
        ("mse oracle", mse_oracle),
        ("footprint", footprint),
        ("desk-scale substitute", desk_scale_substitute),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name} ({secs:.1}s): {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
