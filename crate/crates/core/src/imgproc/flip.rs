use crate::image::{Image, ImageError};
use crate::tensor::{TensorAllocator, TensorElement};

use super::check_same_size;

/// Mirrors `src` left to right into `dst`: `dst(y, x) = src(y, width - 1 - x)`.
pub fn flip_horizontal<T, const C: usize, A1, A2>(
    src: &Image<T, C, A1>,
    dst: &mut Image<T, C, A2>,
) -> Result<(), ImageError>
where
    T: TensorElement,
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    check_same_size(src, dst)?;
    let row_len = src.width() * C;
    src.as_slice()
        .chunks_exact(row_len)
        .zip(dst.as_slice_mut().chunks_exact_mut(row_len))
        .for_each(|(src_row, dst_row)| {
            src_row
                .chunks_exact(C)
                .zip(dst_row.chunks_exact_mut(C).rev())
                .for_each(|(s, d)| d.copy_from_slice(s));
        });
    Ok(())
}

/// Mirrors `src` top to bottom into `dst`.
pub fn flip_vertical<T, const C: usize, A1, A2>(
    src: &Image<T, C, A1>,
    dst: &mut Image<T, C, A2>,
) -> Result<(), ImageError>
where
    T: TensorElement,
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    check_same_size(src, dst)?;
    let row_len = src.width() * C;
    src.as_slice()
        .chunks_exact(row_len)
        .zip(dst.as_slice_mut().chunks_exact_mut(row_len).rev())
        .for_each(|(s, d)| d.copy_from_slice(s));
    Ok(())
}
