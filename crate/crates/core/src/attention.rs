//! End-to-end N:M sparse attention and its comparison with full attention.

use crate::block::BlockMask;
use crate::codec::{decompress, CompressedSparse, SparsityMode};
use crate::error::{shape, Result};
use crate::sddmm::{sddmm_prune, FusedStats};
use crate::softmax::softmax_rows;
use crate::spmm::spmm;
use crate::tensor::{attention_weights, AttentionInputs, DenseMatrix};

/// Output of [`dfss_attention_detailed`].
#[derive(Debug, Clone)]
pub struct SparseAttention {
    pub output: DenseMatrix,
    /// Row-softmaxed compressed attention weights.
    pub weights: CompressedSparse,
    pub stats: FusedStats,
}

/// `spmm(softmax_rows(sddmm_prune(Q, K, mode, 1/sqrt(d))), V)`.
pub fn dfss_attention(
    inputs: &AttentionInputs,
    mode: SparsityMode,
    block_mask: Option<&BlockMask>,
) -> Result<DenseMatrix> {
    Ok(dfss_attention_detailed(inputs, mode, block_mask)?.output)
}

pub fn dfss_attention_detailed(
    inputs: &AttentionInputs,
    mode: SparsityMode,
    block_mask: Option<&BlockMask>,
) -> Result<SparseAttention> {
    let (scores, stats) =
        sddmm_prune(&inputs.q, &inputs.k, mode, inputs.score_scale(), block_mask)?;
    let weights = softmax_rows(&scores)?;
    let output = spmm(&weights, &inputs.v, None)?;
    Ok(SparseAttention {
        output,
        weights,
        stats,
    })
}

/// Deviation of a sparse attention output from the full one.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxError {
    /// `||full - sparse||_F / ||full||_F`.
    pub rel_l2: f64,
    pub max_abs: f64,
    /// Per-row relative L2 error.
    pub row_rel: Vec<f64>,
}

fn rel(diff_sq: f64, base_sq: f64) -> f64 {
    match (diff_sq == 0.0, base_sq == 0.0) {
        (true, _) => 0.0,
        (false, true) => f64::INFINITY,
        _ => (diff_sq / base_sq).sqrt(),
    }
}

pub fn approx_error(full: &DenseMatrix, sparse: &DenseMatrix) -> Result<ApproxError> {
    if full.rows() != sparse.rows() || full.cols() != sparse.cols() {
        return Err(shape(format!(
            "{}x{} vs {}x{}",
            full.rows(),
            full.cols(),
            sparse.rows(),
            sparse.cols()
        )));
    }
    let mut max_abs: f64 = 0.0;
    let (mut diff_total, mut base_total) = (0.0, 0.0);
    let mut row_rel = Vec::with_capacity(full.rows());
    for i in 0..full.rows() {
        let (mut diff_sq, mut base_sq) = (0.0, 0.0);
        for (a, b) in full.row(i).iter().zip(sparse.row(i)) {
            let delta = a - b;
            max_abs = max_abs.max(delta.abs());
            diff_sq += delta * delta;
            base_sq += a * a;
        }
        row_rel.push(rel(diff_sq, base_sq));
        diff_total += diff_sq;
        base_total += base_sq;
    }
    Ok(ApproxError {
        rel_l2: rel(diff_total, base_total),
        max_abs,
        row_rel,
    })
}

/// Dense and sparse attention weight matrices of one head, for export.
#[derive(Debug, Clone)]
pub struct AttentionHeatmaps {
    pub dense: DenseMatrix,
    pub sparse: DenseMatrix,
}

impl AttentionHeatmaps {
    /// Kept positions where the sparse weight falls below the dense one by
    /// more than `tol`. Restricting softmax to a subset can only raise each
    /// kept weight, so this is empty up to rounding.
    pub fn domination_violations(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dense.rows() {
            for (j, (&d, &s)) in self.dense.row(i).iter().zip(self.sparse.row(i)).enumerate() {
                if s != 0.0 && s + tol < d {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

pub fn attention_heatmap(
    inputs: &AttentionInputs,
    mode: SparsityMode,
) -> Result<AttentionHeatmaps> {
    let dense = attention_weights(inputs)?;
    let weights = dfss_attention_detailed(inputs, mode, None)?.weights;
    Ok(AttentionHeatmaps {
        dense,
        sparse: decompress(&weights)?,
    })
}
