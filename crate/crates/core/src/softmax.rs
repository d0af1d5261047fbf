//! Row softmax over the kept entries of a compressed matrix.

use crate::codec::{CompressedSparse, Layout};
use crate::error::{Result, SparseError};
use crate::tensor::stable_softmax_in_place;

/// Replaces each row's nonzeros by their max-shifted softmax. Metadata is
/// unchanged, so pruned slots stay zero.
pub fn softmax_rows(c: &CompressedSparse) -> Result<CompressedSparse> {
    if c.layout() != Layout::Logical {
        return Err(SparseError::Layout("softmax_rows"));
    }
    let mut out = Vec::with_capacity(c.nonzeros().len());
    for r in 0..c.rows() {
        let row = c.row_nonzeros(r);
        if row.is_empty() {
            return Err(SparseError::EmptyRow(r));
        }
        let start = out.len();
        out.extend_from_slice(row);
        stable_softmax_in_place(&mut out[start..]);
    }
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(SparseError::NonFinite { index });
    }
    Ok(c.with_nonzeros(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::BlockMask;
    use crate::codec::{compress_logical, decompress, SparsityMode};
    use crate::tensor::DenseMatrix;

    fn one_row(nonzeros: &[f64]) -> CompressedSparse {
        let nibbles = vec![0x4; nonzeros.len()];
        CompressedSparse::from_parts(
            1,
            2 * nonzeros.len(),
            SparsityMode::OneOfTwo,
            Layout::Logical,
            nonzeros.to_vec(),
            nibbles,
            None,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_rows() {
        let out = softmax_rows(&one_row(&[0.0, 0.0])).unwrap();
        assert_eq!(out.nonzeros(), &[0.5, 0.5]);
        let out = softmax_rows(&one_row(&[3f64.ln(), 0.0])).unwrap();
        assert!((out.nonzeros()[0] - 0.75).abs() < 1e-15);
        assert!((out.nonzeros()[1] - 0.25).abs() < 1e-15);
        let out = softmax_rows(&one_row(&[1000.0, 1001.0])).unwrap();
        let e = std::f64::consts::E;
        assert!((out.nonzeros()[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((out.nonzeros()[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn metadata_preserved_and_pruned_slots_zero() {
        let m = DenseMatrix::from_fn(3, 8, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.0).unwrap();
        let c = compress_logical(&m, SparsityMode::TwoOfFour).unwrap();
        let s = softmax_rows(&c).unwrap();
        assert_eq!(s.metadata(), c.metadata());
        let (before, after) = (decompress(&c).unwrap(), decompress(&s).unwrap());
        let keep = crate::codec::prune_dense(&m, SparsityMode::TwoOfFour)
            .unwrap()
            .1;
        for i in 0..3 {
            assert!((after.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..8 {
                if !keep.is_kept(i, j) {
                    assert_eq!(after.get(i, j), 0.0);
                    assert_eq!(before.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn empty_rows_rejected() {
        let mask = BlockMask::new(2, 1, vec![true, false]).unwrap();
        let c = CompressedSparse::from_parts(
            2,
            2,
            SparsityMode::OneOfTwo,
            Layout::Logical,
            vec![1.0],
            vec![0x4],
            Some(mask),
        )
        .unwrap();
        assert_eq!(softmax_rows(&c), Err(SparseError::EmptyRow(1)));
    }
}
