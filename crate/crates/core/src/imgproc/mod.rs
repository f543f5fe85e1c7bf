//! Image-processing kernels.
//!
//! Every kernel reads from a source image and writes into a caller-provided
//! destination; none of them allocate. Sizes are checked up front and a
//! mismatch is reported before any pixel is written.

pub mod color;
pub mod filter;
pub mod flip;
pub mod resize;

use crate::image::{Image, ImageError};
use crate::tensor::{TensorAllocator, TensorElement};

pub(crate) fn check_same_size<T, U, const C1: usize, const C2: usize, A1, A2>(
    src: &Image<T, C1, A1>,
    dst: &Image<U, C2, A2>,
) -> Result<(), ImageError>
where
    T: TensorElement,
    U: TensorElement,
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    if src.size() != dst.size() {
        return Err(ImageError::SizeMismatch {
            src: src.size(),
            dst: dst.size(),
        });
    }
    Ok(())
}
