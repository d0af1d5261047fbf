//! Compressed N:M sparse times dense multiply.

use crate::block::BlockMask;
use crate::codec::{tile_layout_decode, CompressedSparse, Layout};
use crate::error::{shape, Result};
use crate::tensor::DenseMatrix;

/// `A V` where `A` is compressed. Each kept value is gathered against the row
/// of `V` its nibble points at. Tiles switched off in `block_mask` are skipped,
/// as are tiles absent from `A` itself.
pub fn spmm(
    a: &CompressedSparse,
    v: &DenseMatrix,
    block_mask: Option<&BlockMask>,
) -> Result<DenseMatrix> {
    if a.layout() == Layout::TileInterleaved {
        return spmm(&tile_layout_decode(a)?, v, block_mask);
    }
    if a.dense_cols() != v.rows() {
        return Err(shape(format!(
            "A has {} columns, V has {} rows",
            a.dense_cols(),
            v.rows()
        )));
    }
    let tiles = block_mask
        .map(|m| m.tile_shape(a.rows(), a.dense_cols()).map(|t| (m, t)))
        .transpose()?;
    let d = v.cols();
    let mut out = vec![0.0; a.rows() * d];
    for r in 0..a.rows() {
        let out_row = &mut out[r * d..(r + 1) * d];
        for (j, w) in a.row_entries(r)? {
            if let Some((mask, (tr, tc))) = tiles {
                if !mask.is_kept(r / tr, j / tc) {
                    continue;
                }
            }
            for (o, x) in out_row.iter_mut().zip(v.row(j)) {
                *o += w * x;
            }
        }
    }
    DenseMatrix::new(a.rows(), d, out)
}
