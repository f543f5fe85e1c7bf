use crate::image::{Image, ImageError};
use crate::tensor::TensorAllocator;

use super::check_same_size;

/// Sobel gradient magnitude, `sqrt(gx² + gy²)`, computed per channel.
///
/// `gx` correlates each 3×3 neighborhood with `[[-1, 0, 1], [-2, 0, 2],
/// [-1, 0, 1]]` and `gy` with its transpose. Pixels outside the image take
/// the value of the nearest edge pixel. The magnitude is not normalized.
/// Only `kernel_size == 3` is supported.
pub fn sobel<const C: usize, A1, A2>(
    src: &Image<f32, C, A1>,
    dst: &mut Image<f32, C, A2>,
    kernel_size: usize,
) -> Result<(), ImageError>
where
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    if kernel_size != 3 {
        return Err(ImageError::UnsupportedKernelSize(kernel_size));
    }
    check_same_size(src, dst)?;

    let (w, h) = (src.width(), src.height());
    let row_len = w * C;
    let data = src.as_slice();

    dst.as_slice_mut()
        .chunks_exact_mut(row_len)
        .enumerate()
        .for_each(|(y, dst_row)| {
            let up = &data[y.saturating_sub(1) * row_len..][..row_len];
            let mid = &data[y * row_len..][..row_len];
            let down = &data[(y + 1).min(h - 1) * row_len..][..row_len];
            for x in 0..w {
                let xl = x.saturating_sub(1) * C;
                let xc = x * C;
                let xr = (x + 1).min(w - 1) * C;
                for c in 0..C {
                    let (a, b, d) = (up[xl + c], up[xc + c], up[xr + c]);
                    let (e, g) = (mid[xl + c], mid[xr + c]);
                    let (p, q, r) = (down[xl + c], down[xc + c], down[xr + c]);
                    let gx = (d - a) + 2.0 * (g - e) + (r - p);
                    let gy = (p - a) + 2.0 * (q - b) + (r - d);
                    dst_row[xc + c] = (gx * gx + gy * gy).sqrt();
                }
            }
        });
    Ok(())
}
