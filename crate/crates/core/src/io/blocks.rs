//! Cutting bitmaps into sample columns and tiling columns back into bitmaps.
//!
//! A `bh × bw` block is vectorized column by column: pixel `(r, c)` of the
//! block is entry `c·bh + r` of the sample. Rendering uses the same order.

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};

fn check_block(bh: usize, bw: usize) -> Result<()> {
    if bh == 0 || bw == 0 {
        return Err(BmfError::InvalidParameter("block size must be positive".into()));
    }
    Ok(())
}

/// Splits `image` into non-overlapping `bh × bw` blocks in raster order and
/// returns them as the columns of a `(bh·bw) × n` matrix. Partial blocks at
/// the right and bottom edges are dropped.
pub fn image_to_blocks(image: &BinMatrix, bh: usize, bw: usize) -> Result<BinMatrix> {
    check_block(bh, bw)?;
    if bh > image.nrows() || bw > image.ncols() {
        return Err(BmfError::InvalidParameter(format!(
            "block {bh}x{bw} larger than image {}x{}",
            image.nrows(),
            image.ncols()
        )));
    }
    let (grid_h, grid_w) = (image.nrows() / bh, image.ncols() / bw);
    let mut cols = Vec::with_capacity(grid_h * grid_w);
    for by in 0..grid_h {
        for bx in 0..grid_w {
            let bits = (0..bw).flat_map(|c| (0..bh).map(move |r| (by * bh + r, bx * bw + c)));
            cols.push(PackedBits::from_bools(bits.map(|(i, j)| image.get(i, j))));
        }
    }
    BinMatrix::from_columns(bh * bw, cols)
}

/// Inverse of [`image_to_blocks`] for a `grid_h × grid_w` arrangement.
pub fn blocks_to_image(blocks: &BinMatrix, bh: usize, bw: usize, grid_h: usize, grid_w: usize) -> Result<BinMatrix> {
    check_block(bh, bw)?;
    if blocks.nrows() != bh * bw {
        return Err(BmfError::mismatch("block length", bh * bw, blocks.nrows()));
    }
    if blocks.ncols() != grid_h * grid_w {
        return Err(BmfError::mismatch("block count", grid_h * grid_w, blocks.ncols()));
    }
    let mut image = BinMatrix::zeros(grid_h * bh, grid_w * bw);
    for (b, col) in blocks.columns().iter().enumerate() {
        let (by, bx) = (b / grid_w, b % grid_w);
        for k in col.iter_ones() {
            image.set(by * bh + k % bh, bx * bw + k / bh, true);
        }
    }
    Ok(image)
}

/// Tiles the columns of `columns` as `tile_h × tile_w` pictures, `grid_cols`
/// per row in column order, separated and framed by one-pixel blank lines.
pub fn render_mosaic(columns: &BinMatrix, tile_h: usize, tile_w: usize, grid_cols: usize) -> Result<BinMatrix> {
    check_block(tile_h, tile_w)?;
    if grid_cols == 0 {
        return Err(BmfError::InvalidParameter("grid must have at least one column".into()));
    }
    if columns.nrows() != tile_h * tile_w {
        return Err(BmfError::mismatch(
            "tile size vs column length",
            columns.nrows(),
            tile_h * tile_w,
        ));
    }
    let count = columns.ncols();
    let grid_rows = count.div_ceil(grid_cols).max(1);
    let grid_cols = grid_cols.min(count.max(1));
    let mut image = BinMatrix::zeros(grid_rows * (tile_h + 1) + 1, grid_cols * (tile_w + 1) + 1);
    for (t, col) in columns.columns().iter().enumerate() {
        let top = 1 + (t / grid_cols) * (tile_h + 1);
        let left = 1 + (t % grid_cols) * (tile_w + 1);
        for k in col.iter_ones() {
            image.set(top + k % tile_h, left + k / tile_h, true);
        }
    }
    Ok(image)
}
