//! Image codecs: PNG and baseline JPEG, plus file helpers.
//!
//! Decoders size the output image from the stream header. PNG decodes
//! straight into it; JPEG reconstructs component planes first and then
//! upsamples and color-converts into the output.

mod error;
pub mod functional;
pub mod jpeg;
pub mod png;

pub use error::IoError;
pub use functional::{read_image_any, write_image_jpeg, write_image_png};
pub use jpeg::{decode_jpeg, encode_jpeg};
pub use png::{decode_png, encode_png, encode_png_u16};

use crate::image::{Image, ImageSize};

/// Container format of an encoded byte stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageFormat {
    Png,
    Jpeg,
    Unknown,
}

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];
const JPEG_MAGIC: [u8; 3] = [0xff, 0xd8, 0xff];

impl ImageFormat {
    /// Identifies the format from leading magic bytes; file extensions are
    /// never consulted.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(&PNG_MAGIC) {
            ImageFormat::Png
        } else if bytes.starts_with(&JPEG_MAGIC) {
            ImageFormat::Jpeg
        } else {
            ImageFormat::Unknown
        }
    }
}

/// An encoded image stream with the format detected from its magic bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    bytes: Vec<u8>,
    format_hint: ImageFormat,
}

impl EncodedImage {
    pub fn new(bytes: Vec<u8>) -> Result<Self, IoError> {
        if bytes.is_empty() {
            return Err(IoError::CorruptStream("empty stream".into()));
        }
        let format_hint = ImageFormat::sniff(&bytes);
        Ok(Self { bytes, format_hint })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn format_hint(&self) -> ImageFormat {
        self.format_hint
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn decode(&self) -> Result<DecodedImage, IoError> {
        decode_image(&self.bytes)
    }
}

/// A decoded image whose channel count and bit depth are known only at
/// runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodedImage {
    Gray8(Image<u8, 1>),
    GrayAlpha8(Image<u8, 2>),
    Rgb8(Image<u8, 3>),
    Rgba8(Image<u8, 4>),
    Gray16(Image<u16, 1>),
    GrayAlpha16(Image<u16, 2>),
    Rgb16(Image<u16, 3>),
    Rgba16(Image<u16, 4>),
}

impl DecodedImage {
    pub fn size(&self) -> ImageSize {
        match self {
            DecodedImage::Gray8(img) => img.size(),
            DecodedImage::GrayAlpha8(img) => img.size(),
            DecodedImage::Rgb8(img) => img.size(),
            DecodedImage::Rgba8(img) => img.size(),
            DecodedImage::Gray16(img) => img.size(),
            DecodedImage::GrayAlpha16(img) => img.size(),
            DecodedImage::Rgb16(img) => img.size(),
            DecodedImage::Rgba16(img) => img.size(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            DecodedImage::Gray8(_) | DecodedImage::Gray16(_) => 1,
            DecodedImage::GrayAlpha8(_) | DecodedImage::GrayAlpha16(_) => 2,
            DecodedImage::Rgb8(_) | DecodedImage::Rgb16(_) => 3,
            DecodedImage::Rgba8(_) | DecodedImage::Rgba16(_) => 4,
        }
    }

    /// Bits per channel sample: 8 or 16.
    pub fn bit_depth(&self) -> u8 {
        match self {
            DecodedImage::Gray8(_)
            | DecodedImage::GrayAlpha8(_)
            | DecodedImage::Rgb8(_)
            | DecodedImage::Rgba8(_) => 8,
            _ => 16,
        }
    }

    /// Interleaved 8-bit samples, or `None` for 16-bit images.
    pub fn as_u8_slice(&self) -> Option<&[u8]> {
        match self {
            DecodedImage::Gray8(img) => Some(img.as_slice()),
            DecodedImage::GrayAlpha8(img) => Some(img.as_slice()),
            DecodedImage::Rgb8(img) => Some(img.as_slice()),
            DecodedImage::Rgba8(img) => Some(img.as_slice()),
            _ => None,
        }
    }

    /// Unwraps an 8-bit image with exactly `C` channels.
    pub fn into_u8<const C: usize>(self) -> Result<Image<u8, C>, IoError> {
        let actual = (self.channels(), self.bit_depth());
        let tensor = match self {
            DecodedImage::Gray8(img) => img.into_tensor(),
            DecodedImage::GrayAlpha8(img) => img.into_tensor(),
            DecodedImage::Rgb8(img) => img.into_tensor(),
            DecodedImage::Rgba8(img) => img.into_tensor(),
            _ => {
                return Err(IoError::UnexpectedLayout {
                    channels: actual.0,
                    bit_depth: actual.1,
                })
            }
        };
        Image::from_tensor(tensor).map_err(|_| IoError::UnexpectedLayout {
            channels: actual.0,
            bit_depth: actual.1,
        })
    }

    /// Unwraps a 16-bit image with exactly `C` channels.
    pub fn into_u16<const C: usize>(self) -> Result<Image<u16, C>, IoError> {
        let actual = (self.channels(), self.bit_depth());
        let tensor = match self {
            DecodedImage::Gray16(img) => img.into_tensor(),
            DecodedImage::GrayAlpha16(img) => img.into_tensor(),
            DecodedImage::Rgb16(img) => img.into_tensor(),
            DecodedImage::Rgba16(img) => img.into_tensor(),
            _ => {
                return Err(IoError::UnexpectedLayout {
                    channels: actual.0,
                    bit_depth: actual.1,
                })
            }
        };
        Image::from_tensor(tensor).map_err(|_| IoError::UnexpectedLayout {
            channels: actual.0,
            bit_depth: actual.1,
        })
    }
}

/// Decodes a PNG or JPEG stream, dispatching on magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<DecodedImage, IoError> {
    match ImageFormat::sniff(bytes) {
        ImageFormat::Png => decode_png(bytes),
        ImageFormat::Jpeg => decode_jpeg(bytes),
        ImageFormat::Unknown => Err(IoError::UnknownFormat),
    }
}
