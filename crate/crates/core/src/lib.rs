//! Dynamic N:M fine-grained structured sparse attention.
//!
//! The pipeline computes `scale * Q K^T` tile by tile and prunes each tile to
//! 1:2 or 2:4 sparsity before anything leaves the tile buffer
//! ([`sddmm_prune`]), normalizes the kept scores per row ([`softmax_rows`]),
//! and multiplies the compressed weights by `V` ([`spmm`]). The compressed
//! format stores kept values plus one 4-bit nibble per group and can be
//! reordered into the 32-row tile layout used by sparse GEMM kernels.
//!
//! [`theory`] holds the analytical models used to reason about the pattern:
//! L^p ticket quality, memory-traffic speedups and kernel MSE.

pub mod attention;
pub mod block;
pub mod codec;
pub mod error;
pub mod random;
pub mod sddmm;
pub mod softmax;
pub mod spmm;
pub mod tensor;
pub mod theory;

pub use attention::{
    approx_error, attention_heatmap, dfss_attention, dfss_attention_detailed, ApproxError,
    AttentionHeatmaps, SparseAttention,
};
pub use block::BlockMask;
pub use codec::container;
pub use codec::{
    compress_logical, decompress, prune_dense, select_group, select_pair_by_sum,
    tile_layout_decode, tile_layout_encode, CompressedSparse, GroupSelection, Layout, PruneMask,
    SparsityMode,
};
pub use error::{Result, SparseError};
pub use sddmm::{sddmm_prune, sddmm_prune_tiled, FusedStats, FusedTiling};
pub use softmax::softmax_rows;
pub use spmm::spmm;
pub use tensor::{
    attention_weights, full_attention, gemm_scaled, gemm_scaled_tiled, AttentionInputs,
    DenseMatrix, GemmTiling,
};
