//! Blocked-ELL tile mask layered over N:M sparsity.

use crate::error::{shape, Result, SparseError};

/// Boolean mask over a grid of tiles; `true` means the tile is computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMask {
    grid_rows: usize,
    grid_cols: usize,
    bits: Vec<bool>,
}

impl BlockMask {
    pub fn new(grid_rows: usize, grid_cols: usize, bits: Vec<bool>) -> Result<Self> {
        if grid_rows == 0 || grid_cols == 0 {
            return Err(shape("block mask grid must be non-empty"));
        }
        if bits.len() != grid_rows * grid_cols {
            return Err(shape(format!(
                "block mask has {} bits for a {grid_rows}x{grid_cols} grid",
                bits.len()
            )));
        }
        Ok(Self {
            grid_rows,
            grid_cols,
            bits,
        })
    }

    pub fn all(grid_rows: usize, grid_cols: usize) -> Result<Self> {
        Self::new(grid_rows, grid_cols, vec![true; grid_rows * grid_cols])
    }

    /// Keeps only tiles within `bandwidth` tile-diagonals of the main diagonal.
    pub fn banded(grid: usize, bandwidth: usize) -> Result<Self> {
        let bits = (0..grid * grid)
            .map(|t| (t / grid).abs_diff(t % grid) <= bandwidth)
            .collect();
        Self::new(grid, grid, bits)
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    #[inline]
    pub fn is_kept(&self, tile_row: usize, tile_col: usize) -> bool {
        self.bits[tile_row * self.grid_cols + tile_col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn kept_in_row(&self, tile_row: usize) -> usize {
        self.bits[tile_row * self.grid_cols..(tile_row + 1) * self.grid_cols]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// Checks the grid against a `rows x cols` matrix and returns the tile
    /// size `(tile_rows, tile_cols)` it implies.
    pub fn tile_shape(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        if !rows.is_multiple_of(self.grid_rows) || !cols.is_multiple_of(self.grid_cols) {
            return Err(shape(format!(
                "{rows}x{cols} matrix does not split into a {}x{} tile grid",
                self.grid_rows, self.grid_cols
            )));
        }
        Ok((rows / self.grid_rows, cols / self.grid_cols))
    }

    pub(crate) fn expect_grid(&self, want_rows: usize, want_cols: usize) -> Result<()> {
        if self.grid_rows != want_rows || self.grid_cols != want_cols {
            return Err(SparseError::MaskGrid {
                got_rows: self.grid_rows,
                got_cols: self.grid_cols,
                want_rows,
                want_cols,
            });
        }
        Ok(())
    }
}
