use std::path::PathBuf;

use crate::image::ImageError;

/// Errors raised by codecs and file helpers.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("unsupported PNG feature: {0}")]
    UnsupportedPngFeature(String),

    #[error("unsupported JPEG feature: {0}")]
    UnsupportedJpegFeature(String),

    #[error("JPEG quality must be in 1..=100, got {0}")]
    InvalidQuality(u8),

    #[error("cannot encode {channels}-channel images as {format}")]
    UnsupportedChannelCount { channels: usize, format: &'static str },

    #[error("image of {width}x{height} exceeds the {format} dimension limit")]
    DimensionsTooLarge {
        width: usize,
        height: usize,
        format: &'static str,
    },

    #[error("decoded image has {channels} channels at {bit_depth} bits, not the requested layout")]
    UnexpectedLayout { channels: usize, bit_depth: u8 },

    #[error("encoding failed: {0}")]
    Encode(String),

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unknown image format")]
    UnknownFormat,

    #[error(transparent)]
    Image(#[from] ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
