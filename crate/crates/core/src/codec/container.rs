//! `NMCS` binary container for [`CompressedSparse`].
//!
//! All integers are little-endian.
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 4    | magic `b"NMCS"`                               |
//! | 4      | 1    | version: 1 = plain, 2 = with block mask       |
//! | 5      | 1    | mode: 1 = 1:2, 2 = 2:4                        |
//! | 6      | 1    | layout: 0 = logical, 1 = tile-interleaved     |
//! | 7      | 4    | rows (u32)                                    |
//! | 11     | 4    | dense_cols (u32)                              |
//!
//! Version 2 then stores `grid_rows` (u32), `grid_cols` (u32) and the tile
//! mask as `ceil(grid_rows * grid_cols / 8)` bytes, row-major, least
//! significant bit first.
//!
//! The payload follows: every nonzero as an `f64`, then the metadata nibbles
//! packed two per byte with the earlier nibble in the low half. An odd
//! trailing nibble leaves the final high half zero. Counts are implied by the
//! header, and trailing bytes are rejected.

use super::{CompressedSparse, Layout, SparsityMode};
use crate::block::BlockMask;
use crate::error::{Result, SparseError};

pub const MAGIC: &[u8; 4] = b"NMCS";
/// Bytes before the payload in a version-1 container.
pub const HEADER_LEN: usize = 15;

fn err(msg: impl Into<String>) -> SparseError {
    SparseError::Container(msg.into())
}

/// Serializes `c` into the `NMCS` container.
pub fn to_bytes(c: &CompressedSparse) -> Result<Vec<u8>> {
    let rows = u32::try_from(c.rows()).map_err(|_| err("rows exceed u32"))?;
    let cols = u32::try_from(c.dense_cols()).map_err(|_| err("dense_cols exceed u32"))?;
    let mut out =
        Vec::with_capacity(HEADER_LEN + c.nonzeros().len() * 8 + c.metadata().len().div_ceil(2));
    out.extend_from_slice(MAGIC);
    out.push(if c.block_mask().is_some() { 2 } else { 1 });
    out.push(c.mode().code());
    out.push(c.layout().code());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    if let Some(mask) = c.block_mask() {
        out.extend_from_slice(&(mask.grid_rows() as u32).to_le_bytes());
        out.extend_from_slice(&(mask.grid_cols() as u32).to_le_bytes());
        for chunk in mask.bits().chunks(8) {
            out.push(
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |b, (k, &bit)| b | u8::from(bit) << k),
            );
        }
    }
    for v in c.nonzeros() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for pair in c.metadata().chunks(2) {
        out.push(pair[0] | pair.get(1).copied().unwrap_or(0) << 4);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| err(format!("truncated: need {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

/// Parses an `NMCS` container, validating every field and nibble.
pub fn from_bytes(bytes: &[u8]) -> Result<CompressedSparse> {
    let mut rd = Reader { bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(err("bad magic"));
    }
    let version = rd.u8()?;
    if version != 1 && version != 2 {
        return Err(err(format!("unsupported version {version}")));
    }
    let mode_code = rd.u8()?;
    let mode = SparsityMode::from_code(mode_code)
        .ok_or_else(|| err(format!("unknown mode {mode_code}")))?;
    let layout_code = rd.u8()?;
    let layout = Layout::from_code(layout_code)
        .ok_or_else(|| err(format!("unknown layout {layout_code}")))?;
    let rows = rd.u32()?;
    let cols = rd.u32()?;
    let blocks = if version == 2 {
        let (gr, gc) = (rd.u32()?, rd.u32()?);
        let cells = gr
            .checked_mul(gc)
            .ok_or_else(|| err("mask grid overflow"))?;
        let packed = rd.take(cells.div_ceil(8))?;
        let bits = (0..cells)
            .map(|t| packed[t / 8] >> (t % 8) & 1 == 1)
            .collect();
        Some(BlockMask::new(gr, gc, bits)?)
    } else {
        None
    };

    // Sizes come from the header; compute them before trusting any lengths.
    let stored_cols: usize = match &blocks {
        None => rows
            .checked_mul(cols)
            .ok_or_else(|| err("dimension overflow"))?,
        Some(mask) => {
            let (tile_rows, tile_cols) = mask.tile_shape(rows, cols)?;
            (0..mask.grid_rows())
                .map(|tr| mask.kept_in_row(tr) * tile_cols * tile_rows)
                .sum()
        }
    };
    if cols % mode.group_len() != 0 {
        return Err(SparseError::Alignment {
            what: "columns",
            value: cols,
            multiple: mode.group_len(),
        });
    }
    let n_nz = stored_cols / 2;
    let n_meta = n_nz / mode.kept_per_group();
    let remaining = bytes.len() - rd.pos;
    let want = n_nz
        .checked_mul(8)
        .and_then(|b| b.checked_add(n_meta.div_ceil(2)));
    if want != Some(remaining) {
        return Err(err(format!(
            "payload is {remaining} bytes, header implies {}",
            want.map_or_else(|| "overflow".to_string(), |w| w.to_string())
        )));
    }
    let nonzeros = rd
        .take(n_nz * 8)?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let packed = rd.take(n_meta.div_ceil(2))?;
    if n_meta % 2 == 1 && packed[packed.len() - 1] >> 4 != 0 {
        return Err(err("non-zero padding nibble"));
    }
    let metadata = (0..n_meta)
        .map(|t| packed[t / 2] >> (4 * (t % 2)) & 0xf)
        .collect();
    CompressedSparse::from_parts(rows, cols, mode, layout, nonzeros, metadata, blocks)
}
