use crate::image::{Image, ImageError};
use crate::tensor::{TensorAllocator, TensorElement};

use super::check_same_size;

/// BT.601 luma weights for R, G and B.
pub const RGB_TO_GRAY_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Element types with an RGB → gray conversion.
pub trait GrayElement: TensorElement {
    fn luma(r: Self, g: Self, b: Self) -> Self;
}

impl GrayElement for u8 {
    #[inline(always)]
    fn luma(r: u8, g: u8, b: u8) -> u8 {
        // exact in integers: (299 r + 587 g + 114 b) / 1000, rounded half up
        let sum = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
        ((sum + 500) / 1000) as u8
    }
}

impl GrayElement for f32 {
    #[inline(always)]
    fn luma(r: f32, g: f32, b: f32) -> f32 {
        let [wr, wg, wb] = RGB_TO_GRAY_WEIGHTS;
        wr * r + wg * g + wb * b
    }
}

/// Converts an RGB image to grayscale with BT.601 weights.
///
/// The `u8` path rounds half away from zero and is exact with respect to the
/// real-valued weighted sum.
pub fn gray_from_rgb<T, A1, A2>(
    src: &Image<T, 3, A1>,
    dst: &mut Image<T, 1, A2>,
) -> Result<(), ImageError>
where
    T: GrayElement,
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    check_same_size(src, dst)?;
    src.as_slice()
        .chunks_exact(3)
        .zip(dst.as_slice_mut().iter_mut())
        .for_each(|(rgb, g)| *g = T::luma(rgb[0], rgb[1], rgb[2]));
    Ok(())
}
