//! Analytical models: ticket quality, memory-traffic speedup and kernel MSE.

pub mod cost;
pub mod mse;
pub mod quality;
pub mod special;

pub use cost::{
    bisect, fixed_nm_equal_density, memory_access_counts, performer_dense_crossover,
    performer_features, performer_nm_crossover, performer_speedup, performer_traffic,
    speedup_fixed, speedup_nm, speedup_nm_rational, speedup_topk_bound, topk_break_even_density,
    topk_nm_equal_density, AttentionKind, CostModelParams, MemoryTraffic, Speedup,
};
pub use mse::{mc_mse_sm12, mse_performer_bound, mse_sm12};
pub use quality::{
    empirical_quality, fixed_mask, mc_quality_nm, mc_quality_topk, quality_fixed, quality_nm,
    quality_topk, topk_mask, McEstimate, NmQuality, QualityParams, ANCHOR_P,
};
pub use special::{erf, erfc, erfinv};
