//! Channel-parameterized images on top of rank-3 tensors.
//!
//! An [`Image<T, C>`] stores `height × width × C` elements of `T` with
//! interleaved channels (`RGBRGB…`) in row-major order. The channel count is
//! part of the type, so a kernel that expects three channels cannot be handed
//! a grayscale image.

mod error;

pub use error::ImageError;

use crate::tensor::{
    CpuAllocator, Tensor, TensorAllocator, TensorElement, TensorView, ViewIter,
};

/// Image dimensions in pixels. Both sides are at least one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageSize {
    width: usize,
    height: usize,
}

impl ImageSize {
    pub fn new(width: usize, height: usize) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidSize { width, height });
        }
        Ok(Self { width, height })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels, `width × height`.
    #[inline]
    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

impl std::fmt::Display for ImageSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// An image with `C` interleaved channels of element type `T`.
pub struct Image<T: TensorElement, const C: usize, A: TensorAllocator = CpuAllocator>(
    Tensor<T, 3, A>,
);

/// 8-bit RGB.
pub type ImageRgb8 = Image<u8, 3>;
/// 8-bit single channel.
pub type ImageGray8 = Image<u8, 1>;
/// 16-bit RGB + depth.
pub type ImageRgbd = Image<u16, 4>;

impl<T: TensorElement, const C: usize> Image<T, C, CpuAllocator> {
    /// A `size` image with every element set to `value`.
    pub fn from_size_val(size: ImageSize, value: T) -> Result<Self, ImageError> {
        Self::from_size_val_in(size, value, CpuAllocator)
    }

    /// An image copied from interleaved row-major `data`.
    pub fn from_size_slice(size: ImageSize, data: &[T]) -> Result<Self, ImageError> {
        Self::from_size_slice_in(size, data, CpuAllocator)
    }
}

impl<T: TensorElement, const C: usize, A: TensorAllocator> Image<T, C, A> {
    pub fn from_size_val_in(size: ImageSize, value: T, alloc: A) -> Result<Self, ImageError> {
        Ok(Self(Tensor::from_shape_val(
            [size.height, size.width, C],
            value,
            alloc,
        )?))
    }

    pub fn from_size_slice_in(size: ImageSize, data: &[T], alloc: A) -> Result<Self, ImageError> {
        let expected = size.area() * C;
        if data.len() != expected {
            return Err(ImageError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self(Tensor::from_shape_slice(
            [size.height, size.width, C],
            data,
            alloc,
        )?))
    }

    /// Wraps a `[height, width, C]` tensor.
    pub fn from_tensor(tensor: Tensor<T, 3, A>) -> Result<Self, ImageError> {
        let [h, w, c] = tensor.shape();
        if c != C {
            return Err(ImageError::ChannelMismatch {
                expected: C,
                actual: c,
            });
        }
        ImageSize::new(w, h)?;
        Ok(Self(tensor))
    }

    #[inline]
    pub fn size(&self) -> ImageSize {
        let [height, width, _] = self.0.shape();
        ImageSize { width, height }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.shape()[1]
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.shape()[0]
    }

    #[inline]
    pub fn num_channels(&self) -> usize {
        C
    }

    #[inline]
    pub fn tensor(&self) -> &Tensor<T, 3, A> {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor<T, 3, A> {
        self.0
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        self.0.as_slice()
    }

    #[inline]
    pub fn as_slice_mut(&mut self) -> &mut [T] {
        self.0.as_slice_mut()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        self.0.as_bytes_mut()
    }

    /// The value of channel `ch` at column `x`, row `y`.
    pub fn get_pixel(&self, x: usize, y: usize, ch: usize) -> Result<T, ImageError> {
        self.check_pixel(x, y, ch)?;
        Ok(self.as_slice()[(y * self.width() + x) * C + ch])
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, ch: usize, value: T) -> Result<(), ImageError> {
        self.check_pixel(x, y, ch)?;
        let w = self.width();
        self.as_slice_mut()[(y * w + x) * C + ch] = value;
        Ok(())
    }

    fn check_pixel(&self, x: usize, y: usize, ch: usize) -> Result<(), ImageError> {
        if x >= self.width() || y >= self.height() || ch >= C {
            return Err(ImageError::PixelOutOfBounds { x, y, ch });
        }
        Ok(())
    }

    /// A zero-copy view of the `w × h` region whose top-left corner is `(x, y)`.
    pub fn crop_view(
        &self,
        x: usize,
        y: usize,
        w: usize,
        h: usize,
    ) -> Result<ImageView<'_, T, C, A>, ImageError> {
        let size = self.size();
        let fits_x = x.checked_add(w).is_some_and(|e| e <= size.width);
        let fits_y = y.checked_add(h).is_some_and(|e| e <= size.height);
        if w == 0 || h == 0 || !fits_x || !fits_y {
            return Err(ImageError::RegionOutOfBounds {
                x,
                y,
                width: w,
                height: h,
                image: size,
            });
        }
        let view = self.0.slice_view([y..y + h, x..x + w, 0..C])?;
        Ok(ImageView(view))
    }

    /// A view over the whole image.
    pub fn view(&self) -> ImageView<'_, T, C, A> {
        ImageView(self.0.view())
    }
}

impl<T: TensorElement, const C: usize, A: TensorAllocator> Clone for Image<T, C, A> {
    fn clone(&self) -> Self {
        Self(self.0.clone())
    }
}

impl<T: TensorElement, const C: usize, A: TensorAllocator> std::fmt::Debug for Image<T, C, A> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("size", &self.size())
            .field("channels", &C)
            .finish_non_exhaustive()
    }
}

impl<T: TensorElement, const C: usize, A: TensorAllocator> PartialEq for Image<T, C, A> {
    fn eq(&self, other: &Self) -> bool {
        self.size() == other.size() && self.as_slice() == other.as_slice()
    }
}

/// A borrowed rectangular region of an [`Image`].
#[derive(Debug, Clone, Copy)]
pub struct ImageView<'a, T: TensorElement, const C: usize, A: TensorAllocator>(
    TensorView<'a, T, 3, A>,
);

impl<'a, T: TensorElement, const C: usize, A: TensorAllocator> ImageView<'a, T, C, A> {
    pub fn size(&self) -> ImageSize {
        let [height, width, _] = self.0.shape();
        ImageSize { width, height }
    }

    pub fn width(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn height(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn tensor_view(&self) -> &TensorView<'a, T, 3, A> {
        &self.0
    }

    pub fn get_pixel(&self, x: usize, y: usize, ch: usize) -> Result<T, ImageError> {
        self.0
            .get([y, x, ch])
            .map_err(|_| ImageError::PixelOutOfBounds { x, y, ch })
    }

    /// Interleaved elements in row-major order.
    pub fn iter(&self) -> ViewIter<'a, T, 3, A> {
        self.0.iter()
    }

    /// Copies the region into a new image.
    pub fn to_image(&self) -> Result<Image<T, C, A>, ImageError> {
        Ok(Image(self.0.to_tensor()?))
    }
}

/// Converts an 8-bit image to `f32` in `[0, 1]`, writing into `dst`.
pub fn to_float_scaled<const C: usize, A1, A2>(
    src: &Image<u8, C, A1>,
    dst: &mut Image<f32, C, A2>,
) -> Result<(), ImageError>
where
    A1: TensorAllocator,
    A2: TensorAllocator,
{
    if src.size() != dst.size() {
        return Err(ImageError::SizeMismatch {
            src: src.size(),
            dst: dst.size(),
        });
    }
    for (d, &s) in dst.as_slice_mut().iter_mut().zip(src.as_slice()) {
        *d = s as f32 / 255.0;
    }
    Ok(())
}
