//! Reference implementations the library is checked against. They share no
//! code with the crate beyond the matrix type.

#![allow(dead_code)]

use nmsparse::{DenseMatrix, SparsityMode};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// Small integers, so that ties inside a group are common.
pub fn tied_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-2i32..=2) as f64)
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

/// Indices kept in one group: largest signed values, lower index on ties.
pub fn kept_indices(group: &[f64], keep: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..group.len()).collect();
    idx.sort_by(|&a, &b| group[b].partial_cmp(&group[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(keep);
    idx.sort_unstable();
    idx
}

/// Dense matrix with every dropped entry zeroed.
pub fn prune_oracle(m: &DenseMatrix, mode: SparsityMode) -> DenseMatrix {
    let (g, keep) = match mode {
        SparsityMode::OneOfTwo => (2, 1),
        SparsityMode::TwoOfFour => (4, 2),
    };
    let mut out = vec![0.0; m.rows() * m.cols()];
    for (t, group) in m.data().chunks(g).enumerate() {
        for e in kept_indices(group, keep) {
            out[t * g + e] = group[e];
        }
    }
    DenseMatrix::new(m.rows(), m.cols(), out).unwrap()
}

/// `scale * A B^T`, summing over the inner index in order.
pub fn gemm_oracle(a: &DenseMatrix, b: &DenseMatrix, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.rows(), |i, j| {
        let mut acc = 0.0;
        for (x, y) in a.row(i).iter().zip(b.row(j)) {
            acc += x * y;
        }
        acc * scale
    })
    .unwrap()
}

pub fn matmul_oracle(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
    .unwrap()
}

/// `max |x - y| / max(max |y|, tiny)`.
pub fn rel_max_diff(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let diff = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = y
        .data()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    diff / scale
}

/// Softmax of each row of a dense matrix, max-shifted.
pub fn softmax_oracle(m: &DenseMatrix) -> DenseMatrix {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|v| (v - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        out.extend(e.iter().map(|v| v / s));
    }
    DenseMatrix::new(m.rows(), m.cols(), out).unwrap()
}

pub fn bits_equal(a: &DenseMatrix, b: &DenseMatrix) -> bool {
    a.rows() == b.rows()
        && a.cols() == b.cols()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}
