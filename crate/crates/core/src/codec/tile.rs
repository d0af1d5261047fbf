//! Tile-interleaved metadata layout.
//!
//! Starting from the logical nibble stream the encoder
//!
//! 0. packs every four consecutive nibbles of a row into a 16-bit block,
//!    nibble `k` in bits `4k..4k+4`;
//! 1. moves logical row `r` to [`interleaved_row`]`(r)` inside its 32-row tile;
//! 2. swaps the upper-right and lower-left block of every 2x2 block grid
//!    (interleaved rows `2i, 2i+1`, block columns `2j, 2j+1`);
//! 3. fuses each row's blocks `2c, 2c+1` into a 32-bit unit (block `2c` in
//!    the low half) and emits the units column-major within each 32-row tile:
//!    tile by tile, unit column by unit column, row by row.
//!
//! The emitted units are flattened back into nibbles, low nibble first, so
//! the stream has the same length as the logical one. Nonzeros are untouched.

use super::{CompressedSparse, Layout};
use crate::error::{Result, SparseError};

/// Rows per metadata tile.
pub const TILE_ROWS: usize = 32;

const NIBBLES_PER_BLOCK: usize = 4;
const NIBBLES_PER_UNIT: usize = 8;

/// Destination row of logical row `row` after interleaving by 8.
#[inline]
pub fn interleaved_row(row: usize) -> usize {
    row / 32 * 32 + (row % 8) * 4 + (row % 32) / 8
}

fn logical_row(dst: usize) -> usize {
    dst / 32 * 32 + (dst % 4) * 8 + (dst % 32) / 4
}

/// Position the block at interleaved `(row, col)` ends up at after the
/// sub-diagonal switch. The switch is an involution.
#[inline]
fn switched(row: usize, col: usize) -> (usize, usize) {
    match (row % 2, col % 2) {
        (0, 1) => (row + 1, col - 1),
        (1, 0) => (row - 1, col + 1),
        _ => (row, col),
    }
}

pub(crate) fn check_tile_aligned(c: &CompressedSparse) -> Result<()> {
    if c.block_mask().is_some() {
        return Err(SparseError::Shape(
            "block-masked matrices have no tile-interleaved layout".into(),
        ));
    }
    if !c.rows().is_multiple_of(TILE_ROWS) {
        return Err(SparseError::Alignment {
            what: "rows",
            value: c.rows(),
            multiple: TILE_ROWS,
        });
    }
    let per_row = c.metadata().len() / c.rows().max(1);
    // two 16-bit blocks per 32-bit unit
    if !per_row.is_multiple_of(NIBBLES_PER_UNIT) {
        return Err(SparseError::Alignment {
            what: "metadata nibbles per row",
            value: per_row,
            multiple: NIBBLES_PER_UNIT,
        });
    }
    Ok(())
}

/// Reorders the metadata of a logical matrix into the tile-interleaved layout.
pub fn tile_layout_encode(c: &CompressedSparse) -> Result<CompressedSparse> {
    if c.layout() != Layout::Logical {
        return Err(SparseError::Layout("tile_layout_encode"));
    }
    check_tile_aligned(c)?;
    let rows = c.rows();
    let per_row = c.metadata().len() / rows;
    let block_cols = per_row / NIBBLES_PER_BLOCK;

    // steps 0-2: packed blocks at their interleaved, switched positions
    let mut grid = vec![0u16; rows * block_cols];
    for r in 0..rows {
        let nibbles = c.row_metadata(r);
        let ir = interleaved_row(r);
        for b in 0..block_cols {
            let block = nibbles[b * 4..b * 4 + 4]
                .iter()
                .enumerate()
                .fold(0u16, |acc, (k, &n)| acc | (n as u16) << (4 * k));
            let (dr, dc) = switched(ir, b);
            grid[dr * block_cols + dc] = block;
        }
    }

    // step 3: 32-bit units, column-major inside each tile
    let unit_cols = block_cols / 2;
    let mut out = Vec::with_capacity(c.metadata().len());
    for tile in 0..rows / TILE_ROWS {
        for u in 0..unit_cols {
            for r in tile * TILE_ROWS..(tile + 1) * TILE_ROWS {
                let unit = grid[r * block_cols + 2 * u] as u32
                    | (grid[r * block_cols + 2 * u + 1] as u32) << 16;
                out.extend((0..NIBBLES_PER_UNIT).map(|k| ((unit >> (4 * k)) & 0xf) as u8));
            }
        }
    }
    Ok(c.clone().into_layout(Layout::TileInterleaved, out))
}

/// Inverse of [`tile_layout_encode`].
pub fn tile_layout_decode(c: &CompressedSparse) -> Result<CompressedSparse> {
    if c.layout() != Layout::TileInterleaved {
        return Err(SparseError::Layout("tile_layout_decode"));
    }
    check_tile_aligned(c)?;
    let rows = c.rows();
    let per_row = c.metadata().len() / rows;
    let block_cols = per_row / NIBBLES_PER_BLOCK;
    let unit_cols = block_cols / 2;

    let mut grid = vec![0u16; rows * block_cols];
    let mut units = c.metadata().chunks_exact(NIBBLES_PER_UNIT);
    for tile in 0..rows / TILE_ROWS {
        for u in 0..unit_cols {
            for r in tile * TILE_ROWS..(tile + 1) * TILE_ROWS {
                let unit = units
                    .next()
                    .expect("length checked")
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (k, &n)| acc | (n as u32) << (4 * k));
                grid[r * block_cols + 2 * u] = unit as u16;
                grid[r * block_cols + 2 * u + 1] = (unit >> 16) as u16;
            }
        }
    }

    let mut out = vec![0u8; c.metadata().len()];
    for ir in 0..rows {
        let r = logical_row(ir);
        for b in 0..block_cols {
            let (sr, sc) = switched(ir, b);
            let block = grid[sr * block_cols + sc];
            for k in 0..4 {
                out[r * per_row + b * 4 + k] = ((block >> (4 * k)) & 0xf) as u8;
            }
        }
    }
    Ok(c.clone().into_layout(Layout::Logical, out))
}
