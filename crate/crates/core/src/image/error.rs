use super::ImageSize;
use crate::tensor::TensorError;

/// Errors raised by image construction and image-processing kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    InvalidSize { width: usize, height: usize },

    #[error("data length {actual} does not match image size {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("expected {expected} channels, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("source size {src} does not match destination size {dst}")]
    SizeMismatch { src: ImageSize, dst: ImageSize },

    #[error("pixel ({x}, {y}) channel {ch} is out of bounds")]
    PixelOutOfBounds { x: usize, y: usize, ch: usize },

    #[error("region {width}x{height} at ({x}, {y}) exceeds image {image}")]
    RegionOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        image: ImageSize,
    },

    #[error("unsupported kernel size {0}, only 3 is supported")]
    UnsupportedKernelSize(usize),

    #[error(transparent)]
    Tensor(#[from] TensorError),
}
