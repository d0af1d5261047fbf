//! Score computation fused with N:M pruning.
//!
//! Each output tile of `scale * Q K^T` is accumulated in a tile-sized buffer
//! and pruned in place; only nonzeros and nibbles leave the kernel. No dense
//! score matrix is ever written.

use crate::block::BlockMask;
use crate::codec::{group_nibble, kept_elements, CompressedSparse, Layout, SparsityMode};
use crate::error::{shape, Result, SparseError};
use crate::tensor::{score_tile, DenseMatrix};

/// Tile shape of the fused kernel. The default 32 x 64 tile matches the
/// metadata tile height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusedTiling {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub k_panel: usize,
}

impl Default for FusedTiling {
    fn default() -> Self {
        Self {
            tile_rows: 32,
            tile_cols: 64,
            k_panel: 32,
        }
    }
}

/// Structural accounting of one fused run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FusedStats {
    /// Largest tile buffer held at once, in elements.
    pub peak_tile_elems: usize,
    /// Dense score elements written outside the tile buffer. Always 0.
    pub dense_elems_written: usize,
    pub nonzeros_written: usize,
    pub nibbles_written: usize,
}

impl FusedStats {
    /// Combines stats of disjoint runs.
    pub fn merge(self, other: Self) -> Self {
        Self {
            peak_tile_elems: self.peak_tile_elems.max(other.peak_tile_elems),
            dense_elems_written: self.dense_elems_written + other.dense_elems_written,
            nonzeros_written: self.nonzeros_written + other.nonzeros_written,
            nibbles_written: self.nibbles_written + other.nibbles_written,
        }
    }
}

/// `compress_logical(scale * Q K^T)` without materializing the scores, using
/// the default tiling. Tiles masked out by `block_mask` are skipped entirely.
pub fn sddmm_prune(
    q: &DenseMatrix,
    k: &DenseMatrix,
    mode: SparsityMode,
    scale: f64,
    block_mask: Option<&BlockMask>,
) -> Result<(CompressedSparse, FusedStats)> {
    sddmm_prune_tiled(q, k, mode, scale, block_mask, FusedTiling::default())
}

pub fn sddmm_prune_tiled(
    q: &DenseMatrix,
    k: &DenseMatrix,
    mode: SparsityMode,
    scale: f64,
    block_mask: Option<&BlockMask>,
    tiling: FusedTiling,
) -> Result<(CompressedSparse, FusedStats)> {
    let FusedTiling {
        tile_rows,
        tile_cols,
        k_panel,
    } = tiling;
    if tile_rows == 0 || tile_cols == 0 || k_panel == 0 {
        return Err(shape("tile dimensions must be positive"));
    }
    if q.cols() != k.cols() {
        return Err(shape(format!("Q has d={}, K has d={}", q.cols(), k.cols())));
    }
    let g = mode.group_len();
    let kept = mode.kept_per_group();
    let (rows, cols) = (q.rows(), k.rows());
    for (what, value) in [("key count", cols), ("tile columns", tile_cols)] {
        if value % g != 0 {
            return Err(SparseError::Alignment {
                what,
                value,
                multiple: g,
            });
        }
    }
    let grid_rows = rows.div_ceil(tile_rows);
    let grid_cols = cols.div_ceil(tile_cols);
    if let Some(mask) = block_mask {
        for (what, value, multiple) in [("rows", rows, tile_rows), ("key count", cols, tile_cols)] {
            if value % multiple != 0 {
                return Err(SparseError::Alignment {
                    what,
                    value,
                    multiple,
                });
            }
        }
        mask.expect_grid(grid_rows, grid_cols)?;
    }
    let is_kept = |tr: usize, tc: usize| block_mask.is_none_or(|m| m.is_kept(tr, tc));

    // Stored dense columns of every row, and where each tile's segment starts.
    let mut row_ptr = Vec::with_capacity(rows + 1);
    row_ptr.push(0usize);
    let mut seg_start = vec![0usize; grid_rows * grid_cols];
    for tr in 0..grid_rows {
        let mut stored = 0;
        for tc in 0..grid_cols {
            seg_start[tr * grid_cols + tc] = stored;
            if is_kept(tr, tc) {
                stored += (tc * tile_cols + tile_cols).min(cols) - tc * tile_cols;
            }
        }
        let band = (tr * tile_rows + tile_rows).min(rows) - tr * tile_rows;
        for _ in 0..band {
            let last = *row_ptr.last().expect("non-empty");
            row_ptr.push(last + stored / g * kept);
        }
    }

    let total_nz = row_ptr[rows];
    let mut nonzeros = vec![0.0; total_nz];
    let mut metadata = vec![0u8; total_nz / kept];
    let mut tile = vec![0.0; tile_rows * tile_cols];
    let mut stats = FusedStats {
        peak_tile_elems: tile.len(),
        ..FusedStats::default()
    };

    for tr in 0..grid_rows {
        let r0 = tr * tile_rows;
        let r1 = (r0 + tile_rows).min(rows);
        for tc in 0..grid_cols {
            if !is_kept(tr, tc) {
                continue;
            }
            let c0 = tc * tile_cols;
            let c1 = (c0 + tile_cols).min(cols);
            let width = c1 - c0;
            let acc = &mut tile[..(r1 - r0) * width];
            score_tile(q, k, r0..r1, c0..c1, k_panel, scale, acc);

            // epilogue: prune the accumulators, emit nonzeros and nibbles
            let seg = seg_start[tr * grid_cols + tc];
            for (ti, i) in (r0..r1).enumerate() {
                let mut nz_at = row_ptr[i] + seg / g * kept;
                let first_meta = nz_at / kept;
                let groups = acc[ti * width..(ti + 1) * width].chunks_exact(g);
                for (meta_at, group) in (first_meta..).zip(groups) {
                    let nibble = group_nibble(group, mode);
                    let (idx, count) = kept_elements(nibble, mode);
                    for &e in &idx[..count] {
                        nonzeros[nz_at] = group[e];
                        nz_at += 1;
                    }
                    metadata[meta_at] = nibble;
                }
            }
            let groups = (r1 - r0) * width / g;
            stats.nibbles_written += groups;
            stats.nonzeros_written += groups * kept;
        }
    }

    let out = CompressedSparse::from_parts(
        rows,
        cols,
        mode,
        Layout::Logical,
        nonzeros,
        metadata,
        block_mask.cloned(),
    )?;
    Ok((out, stats))
}
