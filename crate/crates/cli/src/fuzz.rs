use nmsparse::container;
use nmsparse::random::gaussian_matrix;
use nmsparse::{
    compress_logical, decompress, prune_dense, tile_layout_decode, tile_layout_encode, DenseMatrix,
    Layout, SparsityMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::CliError;
use crate::{FuzzArgs, PackArgs};

/// Smallest tile-aligned column count for `mode`.
fn column_unit(mode: SparsityMode) -> usize {
    match mode {
        SparsityMode::OneOfTwo => 16,
        SparsityMode::TwoOfFour => 32,
    }
}

fn random_case(rng: &mut ChaCha20Rng, mode: SparsityMode) -> DenseMatrix {
    let rows = 32 * rng.random_range(1..=2);
    let cols = column_unit(mode) * rng.random_range(1..=4);
    if rng.random_bool(0.5) {
        gaussian_matrix(rng, rows, cols, 0.0, 1.0).expect("finite draws")
    } else {
        // small integers make ties common
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-2i32..=2) as f64)
            .collect();
        DenseMatrix::new(rows, cols, data).expect("finite values")
    }
}

/// Runs every roundtrip on `m`; `Err` describes the first mismatch.
fn check(m: &DenseMatrix, mode: SparsityMode) -> Result<(), String> {
    let c = compress_logical(m, mode).map_err(|e| format!("compress: {e}"))?;
    let (pruned, mask) = prune_dense(m, mode).map_err(|e| format!("prune: {e}"))?;
    let dense = decompress(&c).map_err(|e| format!("decompress: {e}"))?;
    if dense
        .data()
        .iter()
        .zip(pruned.data())
        .any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err("decompress(compress(m)) differs from the pruned matrix".into());
    }
    if !mask.satisfies(mode) {
        return Err(format!("mask violates {mode}"));
    }
    let g = mode.group_len();
    for (t, group) in m.data().chunks(g).enumerate() {
        let kept = |e: usize| mask.is_kept((t * g + e) / m.cols(), (t * g + e) % m.cols());
        let low = (0..g)
            .filter(|&e| kept(e))
            .map(|e| group[e])
            .fold(f64::INFINITY, f64::min);
        let high = (0..g)
            .filter(|&e| !kept(e))
            .map(|e| group[e])
            .fold(f64::NEG_INFINITY, f64::max);
        if low < high {
            return Err(format!("group {t} dropped a larger value"));
        }
    }
    let tiled = tile_layout_encode(&c).map_err(|e| format!("tile encode: {e}"))?;
    if tile_layout_decode(&tiled).map_err(|e| format!("tile decode: {e}"))? != c {
        return Err("tile decode(encode(c)) != c".into());
    }
    for item in [&c, &tiled] {
        let bytes = container::to_bytes(item).map_err(|e| format!("serialize: {e}"))?;
        if container::from_bytes(&bytes).map_err(|e| format!("parse: {e}"))? != *item {
            return Err(format!("{:?} container roundtrip differs", item.layout()));
        }
    }
    Ok(())
}

/// Greedily shrinks a failing case: fewer row tiles, fewer column units,
/// then zeroed entries.
fn minimize(mut m: DenseMatrix, mode: SparsityMode) -> DenseMatrix {
    let fails = |x: &DenseMatrix| check(x, mode).is_err();
    let unit = column_unit(mode);
    loop {
        let (r, c) = (m.rows(), m.cols());
        let smaller = [(r.saturating_sub(32), c), (r, c.saturating_sub(unit))]
            .into_iter()
            .filter(|&(nr, nc)| nr > 0 && nc > 0)
            .map(|(nr, nc)| DenseMatrix::from_fn(nr, nc, |i, j| m.get(i, j)).expect("finite"))
            .find(|x| fails(x));
        match smaller {
            Some(x) => m = x,
            None => break,
        }
    }
    for idx in 0..m.rows() * m.cols() {
        let mut data = m.data().to_vec();
        if data[idx] == 0.0 {
            continue;
        }
        data[idx] = 0.0;
        let x = DenseMatrix::new(m.rows(), m.cols(), data).expect("finite");
        if fails(&x) {
            m = x;
        }
    }
    m
}

fn validate_container(path: &std::path::Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path)?;
    let c = container::from_bytes(&bytes)
        .map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    let reencoded = container::to_bytes(&c).map_err(CliError::failure)?;
    if reencoded != bytes {
        return Err(CliError::failure(
            "container does not re-serialize to the same bytes",
        ));
    }
    if c.layout() == Layout::TileInterleaved {
        let logical = tile_layout_decode(&c).map_err(CliError::failure)?;
        if tile_layout_encode(&logical).map_err(CliError::failure)? != c {
            return Err(CliError::failure("tile layout does not roundtrip"));
        }
    }
    println!(
        "{}: ok ({} {}x{}, {:?}, {} nonzeros)",
        path.display(),
        c.mode(),
        c.rows(),
        c.dense_cols(),
        c.layout(),
        c.nonzeros().len()
    );
    Ok(())
}

pub fn run(args: &FuzzArgs) -> Result<(), CliError> {
    if let Some(path) = &args.container {
        return validate_container(path);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let modes: &[SparsityMode] = match &args.mode {
        Some(m) => std::slice::from_ref(m),
        None => &[SparsityMode::OneOfTwo, SparsityMode::TwoOfFour],
    };
    let mut ok = 0u64;
    for i in 0..args.iters {
        let mode = modes[i as usize % modes.len()];
        let m = random_case(&mut rng, mode);
        if let Err(msg) = check(&m, mode) {
            let small = minimize(m, mode);
            eprintln!("case {i} ({mode}) failed: {msg}");
            eprintln!(
                "minimized counterexample ({}x{}):",
                small.rows(),
                small.cols()
            );
            for r in 0..small.rows() {
                let row: Vec<String> = small.row(r).iter().map(|v| v.to_string()).collect();
                eprintln!("  {}", row.join(" "));
            }
            println!("{} cases, {ok}/{} ok", args.iters, args.iters);
            return Err(CliError::failure(format!("roundtrip mismatch in case {i}")));
        }
        ok += 1;
    }
    println!("{} cases, {ok}/{} ok", args.iters, args.iters);
    Ok(())
}

pub fn pack(args: &PackArgs) -> Result<(), CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let m = gaussian_matrix(&mut rng, args.rows, args.cols, 0.0, 1.0).map_err(CliError::usage)?;
    let mut c = compress_logical(&m, args.mode).map_err(CliError::usage)?;
    if args.tiled {
        c = tile_layout_encode(&c).map_err(CliError::usage)?;
    }
    let bytes = container::to_bytes(&c).map_err(CliError::failure)?;
    std::fs::write(&args.out, &bytes)?;
    println!(
        "wrote {} ({} bytes, {} {}x{}, {:?})",
        args.out.display(),
        bytes.len(),
        c.mode(),
        c.rows(),
        c.dense_cols(),
        c.layout()
    );
    Ok(())
}
