//! Nearest-neighbor and bilinear resizing with pixel-center alignment.
//!
//! The destination image carries the target size. Coordinates map between
//! pixel centers, so a same-size resize is an exact copy.

use crate::image::{Image, ImageError};
use crate::tensor::{TensorAllocator, TensorElement};

/// Source index for destination index `dst` under nearest-neighbor mapping.
///
/// The source center is `(dst + 0.5) * src_len / dst_len - 0.5`; it is
/// rounded to the nearest index with exact halves rounding down, then clamped.
/// Evaluated in integers so no floating-point tie can flip.
#[inline]
pub fn nearest_source_index(dst: usize, src_len: usize, dst_len: usize) -> usize {
    let num = (2 * dst as u64 + 1) * src_len as u64;
    let den = 2 * dst_len as u64;
    let mut idx = num / den;
    if num % den == 0 && idx > 0 {
        idx -= 1;
    }
    (idx as usize).min(src_len - 1)
}

/// Bilinear sample position: lower index, upper index and the weight of the
/// upper one.
#[inline]
fn bilinear_coord(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f32) {
    let scale = src_len as f64 / dst_len as f64;
    let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(src_len - 1);
    (lo, hi, (pos - lo as f64) as f32)
}

/// Resizes `src` into `dst` by nearest-neighbor sampling.
pub fn resize_nearest<T, const C: usize, A1, A2>(
    src: &Image<T, C, A1>,
    dst: &mut Image<T, C, A2>,
) -> Result<(), ImageError>
where
    T: TensorElement,
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    let (src_w, src_h) = (src.width(), src.height());
    let (dst_w, dst_h) = (dst.width(), dst.height());
    let src_data = src.as_slice();
    let src_row_len = src_w * C;
    dst.as_slice_mut()
        .chunks_exact_mut(dst_w * C)
        .enumerate()
        .for_each(|(y, dst_row)| {
            let sy = nearest_source_index(y, src_h, dst_h);
            let src_row = &src_data[sy * src_row_len..(sy + 1) * src_row_len];
            dst_row
                .chunks_exact_mut(C)
                .enumerate()
                .for_each(|(x, px)| {
                    let sx = nearest_source_index(x, src_w, dst_w);
                    px.copy_from_slice(&src_row[sx * C..(sx + 1) * C]);
                });
        });
    Ok(())
}

/// Resizes `src` into `dst` by bilinear interpolation with edge clamping.
pub fn resize_bilinear<const C: usize, A1, A2>(
    src: &Image<f32, C, A1>,
    dst: &mut Image<f32, C, A2>,
) -> Result<(), ImageError>
where
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    let (src_w, src_h) = (src.width(), src.height());
    let (dst_w, dst_h) = (dst.width(), dst.height());
    let src_data = src.as_slice();
    let src_row_len = src_w * C;
    dst.as_slice_mut()
        .chunks_exact_mut(dst_w * C)
        .enumerate()
        .for_each(|(y, dst_row)| {
            let (y0, y1, fy) = bilinear_coord(y, src_h, dst_h);
            let row0 = &src_data[y0 * src_row_len..(y0 + 1) * src_row_len];
            let row1 = &src_data[y1 * src_row_len..(y1 + 1) * src_row_len];
            dst_row
                .chunks_exact_mut(C)
                .enumerate()
                .for_each(|(x, px)| {
                    let (x0, x1, fx) = bilinear_coord(x, src_w, dst_w);
                    for (c, out) in px.iter_mut().enumerate() {
                        let top = (1.0 - fx) * row0[x0 * C + c] + fx * row0[x1 * C + c];
                        let bottom = (1.0 - fx) * row1[x0 * C + c] + fx * row1[x1 * C + c];
                        *out = (1.0 - fy) * top + fy * bottom;
                    }
                });
        });
    Ok(())
}
