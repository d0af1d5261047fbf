//! Memory-traffic speedup models for dense, top-k, fixed, N:M and Performer
//! attention.
//!
//! Kernels are assumed bound by memory access, so speedup is the ratio of
//! element loads and stores. `T` is the GEMM tiling size, `d` the head
//! dimension, `s` the density, `m` the Performer feature count.

use crate::error::{domain, Result};

/// `(n, d, T, s, m)` bundle for the cost models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModelParams {
    pub n: f64,
    pub d: f64,
    pub tile: f64,
    pub s: f64,
    pub m: f64,
}

impl CostModelParams {
    pub fn new(n: f64, d: f64, tile: f64, s: f64, m: f64) -> Result<Self> {
        let p = Self { n, d, tile, s, m };
        p.validate()?;
        Ok(p)
    }

    /// Typical head settings `d = 64, T = 128` with `m = round(d ln d) = 266`.
    pub fn typical(n: f64, s: f64) -> Self {
        Self {
            n,
            d: 64.0,
            tile: 128.0,
            s,
            m: performer_features(64.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("d", self.d), ("m", self.m), ("s", self.s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tile >= 1.0 && self.tile.is_finite()) {
            return Err(domain(format!("tile size must be >= 1, got {}", self.tile)));
        }
        if self.s > 1.0 {
            return Err(domain(format!("density must be <= 1, got {}", self.s)));
        }
        Ok(())
    }

    pub fn with_n(self, n: f64) -> Self {
        Self { n, ..self }
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }
}

/// Random feature count `round(d ln d)`.
pub fn performer_features(d: f64) -> f64 {
    (d * d.ln()).round()
}

/// Which attention variant to count memory accesses for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKind {
    Full,
    /// Explicit per-row top-k at density `s`; `A V` can only tile `1 x T`.
    TopK,
    /// Fixed pattern at density `s` sharing the dense tiling.
    Fixed,
    /// Fused 1:2 / 2:4: half the values plus 1/16 metadata.
    NmSparse,
}

/// Element accesses per attention stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryTraffic {
    pub qk: f64,
    pub softmax: f64,
    pub av: f64,
}

impl MemoryTraffic {
    pub fn total(&self) -> f64 {
        self.qk + self.softmax + self.av
    }
}

pub fn memory_access_counts(
    kind: AttentionKind,
    params: &CostModelParams,
) -> Result<MemoryTraffic> {
    params.validate()?;
    let CostModelParams {
        n, d, tile: t, s, ..
    } = *params;
    let n2 = n * n;
    Ok(match kind {
        AttentionKind::Full => MemoryTraffic {
            qk: n2 * (2.0 * d / t + 1.0),
            softmax: 2.0 * n2,
            av: n * d * (2.0 * n / t + 1.0),
        },
        AttentionKind::TopK => MemoryTraffic {
            qk: n2 * (2.0 * d / t + 1.0),
            softmax: 2.0 * n2 * s,
            av: n * d * (s * n + s * n / t + 1.0),
        },
        AttentionKind::Fixed => MemoryTraffic {
            qk: s * n2 * (2.0 * d / t + 1.0),
            softmax: 2.0 * n2 * s,
            av: n * d * ((1.0 + s) * n / t + 1.0),
        },
        AttentionKind::NmSparse => MemoryTraffic {
            qk: n2 * (2.0 * d / t + 0.5 + 1.0 / 16.0),
            softmax: n2,
            av: n * d * (n / t + n / (2.0 * t) + n / (16.0 * t) + 1.0),
        },
    })
}

/// A speedup model evaluated at finite `n` and in the `n >> d` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup {
    pub finite: f64,
    pub asymptotic: f64,
}

fn ratio_to_full(kind: AttentionKind, params: &CostModelParams) -> Result<f64> {
    let full = memory_access_counts(AttentionKind::Full, params)?.total();
    Ok(full / memory_access_counts(kind, params)?.total())
}

/// Upper bound on top-k speedup; the limit is
/// `(4d + 3T) / (2d + T + (d + 2T + dT) s)`.
pub fn speedup_topk_bound(params: &CostModelParams) -> Result<Speedup> {
    let CostModelParams { d, tile: t, s, .. } = *params;
    Ok(Speedup {
        finite: ratio_to_full(AttentionKind::TopK, params)?,
        asymptotic: (4.0 * d + 3.0 * t) / (2.0 * d + t + (d + 2.0 * t + d * t) * s),
    })
}

/// Fixed-pattern speedup; the limit is `(4d + 3T) / ((1 + 3s) d + 3sT)`.
pub fn speedup_fixed(params: &CostModelParams) -> Result<Speedup> {
    let CostModelParams { d, tile: t, s, .. } = *params;
    Ok(Speedup {
        finite: ratio_to_full(AttentionKind::Fixed, params)?,
        asymptotic: (4.0 * d + 3.0 * t) / ((1.0 + 3.0 * s) * d + 3.0 * s * t),
    })
}

/// N:M speedup; the limit is `(64d + 48T) / (57d + 25T)`. Density is
/// implied by the pattern, `params.s` is ignored.
pub fn speedup_nm(params: &CostModelParams) -> Result<Speedup> {
    let CostModelParams { d, tile: t, .. } = *params;
    Ok(Speedup {
        finite: ratio_to_full(AttentionKind::NmSparse, params)?,
        asymptotic: (64.0 * d + 48.0 * t) / (57.0 * d + 25.0 * t),
    })
}

/// Exact rational `(64d + 48T) / (57d + 25T)`, unreduced.
pub fn speedup_nm_rational(d: u64, tile: u64) -> (u64, u64) {
    (64 * d + 48 * tile, 57 * d + 25 * tile)
}

/// Memory accesses of the Performer computation graph (random-feature maps
/// for Q and K, their normalizers, `phi(K)^T V` and `phi(Q) (phi(K)^T V)`).
pub fn performer_traffic(params: &CostModelParams) -> Result<f64> {
    params.validate()?;
    let CostModelParams {
        n, d, tile: t, m, ..
    } = *params;
    let feature_map = n * m * (2.0 * d / t + 1.0) + n * (d + 1.0) + n * (m + 1.0) + n * (m + 3.0);
    Ok(2.0 * feature_map
        + m * (n + 1.0)
        + n * (m / t + m + 1.0)
        + m * d * (2.0 * n / t + 1.0)
        + n * d * (2.0 * m / t + 1.0)
        + n)
}

/// Dense attention traffic over Performer traffic.
pub fn performer_speedup(params: &CostModelParams) -> Result<f64> {
    let full = memory_access_counts(AttentionKind::Full, params)?.total();
    Ok(full / performer_traffic(params)?)
}

/// Root of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(domain(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo <= 1e-15 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Density below which the top-k bound exceeds 1, in the `n >> d` limit.
pub fn topk_break_even_density(d: f64, tile: f64) -> Result<f64> {
    let p = CostModelParams::new(1.0, d, tile, 0.5, 1.0)?;
    bisect(
        |s| speedup_topk_bound(&p.with_s(s)).map_or(f64::NAN, |v| v.asymptotic) - 1.0,
        1e-9,
        1.0,
    )
}

/// Density at which the top-k bound equals the N:M speedup (`n >> d`).
pub fn topk_nm_equal_density(d: f64, tile: f64) -> Result<f64> {
    let p = CostModelParams::new(1.0, d, tile, 0.5, 1.0)?;
    let nm = speedup_nm(&p)?.asymptotic;
    bisect(
        |s| speedup_topk_bound(&p.with_s(s)).map_or(f64::NAN, |v| v.asymptotic) - nm,
        1e-9,
        1.0,
    )
}

/// Density at which fixed sparsity matches the N:M speedup (`n >> d`).
pub fn fixed_nm_equal_density(d: f64, tile: f64) -> Result<f64> {
    let p = CostModelParams::new(1.0, d, tile, 0.5, 1.0)?;
    let nm = speedup_nm(&p)?.asymptotic;
    bisect(
        |s| speedup_fixed(&p.with_s(s)).map_or(f64::NAN, |v| v.asymptotic) - nm,
        1e-9,
        1.0,
    )
}

/// Sequence length where Performer traffic drops below dense traffic.
pub fn performer_dense_crossover(d: f64, tile: f64, m: f64) -> Result<f64> {
    let p = CostModelParams::new(1.0, d, tile, 1.0, m)?;
    bisect(
        |n| performer_speedup(&p.with_n(n)).map_or(f64::NAN, |v| v - 1.0),
        1.0,
        1e7,
    )
}

/// Sequence length where Performer speedup reaches the finite-`n` N:M speedup.
pub fn performer_nm_crossover(d: f64, tile: f64, m: f64) -> Result<f64> {
    let p = CostModelParams::new(1.0, d, tile, 1.0, m)?;
    bisect(
        |n| {
            let q = p.with_n(n);
            match (performer_speedup(&q), speedup_nm(&q)) {
                (Ok(perf), Ok(nm)) => perf - nm.finite,
                _ => f64::NAN,
            }
        },
        1.0,
        1e7,
    )
}
