use jpeg_encoder::{ColorType as JpegColorType, Encoder};

use super::{DecodedImage, IoError};
use crate::image::Image;
use crate::tensor::TensorAllocator;

mod decoder;
mod huffman;
mod idct;

const MAX_JPEG_DIM: usize = u16::MAX as usize;

/// Coding process declared by a stream's start-of-frame marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JpegCoding {
    Baseline,
    ExtendedSequential,
    Progressive,
    Lossless,
    Hierarchical,
    Arithmetic,
}

/// Walks the marker segments up to the first start-of-frame and reports the
/// coding process it declares.
pub fn probe_coding(bytes: &[u8]) -> Result<JpegCoding, IoError> {
    if !bytes.starts_with(&[0xff, 0xd8]) {
        return Err(IoError::CorruptStream("missing JPEG SOI marker".into()));
    }
    let mut pos = 2;
    loop {
        // markers may be preceded by any number of 0xff fill bytes
        while pos < bytes.len() && bytes[pos] == 0xff && bytes.get(pos + 1) == Some(&0xff) {
            pos += 1;
        }
        let (Some(&0xff), Some(&marker)) = (bytes.get(pos), bytes.get(pos + 1)) else {
            return Err(IoError::CorruptStream("no frame header before end of stream".into()));
        };
        pos += 2;
        match marker {
            0xc0 => return Ok(JpegCoding::Baseline),
            0xc1 => return Ok(JpegCoding::ExtendedSequential),
            0xc2 => return Ok(JpegCoding::Progressive),
            0xc3 => return Ok(JpegCoding::Lossless),
            0xc5..=0xc7 => return Ok(JpegCoding::Hierarchical),
            0xc9..=0xcb | 0xcd..=0xcf => return Ok(JpegCoding::Arithmetic),
            0xda | 0xd9 => {
                return Err(IoError::CorruptStream("scan data before frame header".into()))
            }
            0x01 | 0xd0..=0xd7 => continue,
            _ => {
                let (Some(&hi), Some(&lo)) = (bytes.get(pos), bytes.get(pos + 1)) else {
                    return Err(IoError::CorruptStream("truncated marker segment".into()));
                };
                let len = u16::from_be_bytes([hi, lo]) as usize;
                if len < 2 {
                    return Err(IoError::CorruptStream("invalid segment length".into()));
                }
                pos += len;
            }
        }
    }
}

/// Decodes a JPEG stream into an 8-bit gray or RGB image.
///
/// Grayscale streams decode to one channel and YCbCr or RGB streams to three.
/// Sequential streams decode bit-exactly with libjpeg's default settings
/// (accurate integer IDCT, triangle chroma upsampling). Progressive streams
/// require the `progressive-jpeg` feature; lossless, hierarchical,
/// arithmetic-coded, 12-bit and CMYK streams are rejected.
pub fn decode_jpeg(bytes: &[u8]) -> Result<DecodedImage, IoError> {
    match probe_coding(bytes)? {
        JpegCoding::Baseline | JpegCoding::ExtendedSequential => decoder::decode_sequential(bytes),
        #[cfg(feature = "progressive-jpeg")]
        JpegCoding::Progressive => progressive::decode(bytes),
        #[cfg(not(feature = "progressive-jpeg"))]
        JpegCoding::Progressive => Err(IoError::UnsupportedJpegFeature(
            "progressive coding (enable the `progressive-jpeg` feature)".into(),
        )),
        other => Err(IoError::UnsupportedJpegFeature(format!("{other:?} coding"))),
    }
}

#[cfg(feature = "progressive-jpeg")]
mod progressive {
    use zune_core::bytestream::ZCursor;
    use zune_core::colorspace::ColorSpace;
    use zune_core::options::DecoderOptions;
    use zune_jpeg::JpegDecoder;

    use super::MAX_JPEG_DIM;
    use crate::image::{Image, ImageSize};
    use crate::io::{DecodedImage, IoError};

    pub(super) fn decode(bytes: &[u8]) -> Result<DecodedImage, IoError> {
        let corrupt = |e: zune_jpeg::errors::DecodeErrors| IoError::CorruptStream(e.to_string());
        let options = DecoderOptions::default()
            .set_strict_mode(true)
            .set_max_width(MAX_JPEG_DIM)
            .set_max_height(MAX_JPEG_DIM);
        let mut decoder = JpegDecoder::new_with_options(ZCursor::new(bytes), options);
        decoder.decode_headers().map_err(corrupt)?;
        let (w, h) = decoder
            .dimensions()
            .ok_or_else(|| IoError::CorruptStream("missing frame dimensions".into()))?;
        let size = ImageSize::new(w, h)?;
        let gray = decoder.input_colorspace() == Some(ColorSpace::Luma);
        let out_space = if gray { ColorSpace::Luma } else { ColorSpace::RGB };
        decoder.set_options(options.jpeg_set_out_colorspace(out_space));
        if gray {
            let mut img = Image::<u8, 1>::from_size_val(size, 0)?;
            decoder.decode_into(img.as_slice_mut()).map_err(corrupt)?;
            Ok(DecodedImage::Gray8(img))
        } else {
            let mut img = Image::<u8, 3>::from_size_val(size, 0)?;
            decoder.decode_into(img.as_slice_mut()).map_err(corrupt)?;
            Ok(DecodedImage::Rgb8(img))
        }
    }
}

/// Encodes a gray (`C = 1`) or RGB (`C = 3`) image as baseline JFIF.
///
/// `quality` must lie in `1..=100`. Qualities of 90 and above keep full
/// chroma resolution; lower qualities subsample chroma 2×2.
pub fn encode_jpeg<const C: usize, A: TensorAllocator>(
    img: &Image<u8, C, A>,
    quality: u8,
) -> Result<Vec<u8>, IoError> {
    if !(1..=100).contains(&quality) {
        return Err(IoError::InvalidQuality(quality));
    }
    let color = match C {
        1 => JpegColorType::Luma,
        3 => JpegColorType::Rgb,
        channels => {
            return Err(IoError::UnsupportedChannelCount {
                channels,
                format: "JPEG",
            })
        }
    };
    let (w, h) = (img.width(), img.height());
    if w > MAX_JPEG_DIM || h > MAX_JPEG_DIM {
        return Err(IoError::DimensionsTooLarge {
            width: w,
            height: h,
            format: "JPEG",
        });
    }
    let mut out = Vec::new();
    Encoder::new(&mut out, quality)
        .encode(img.as_slice(), w as u16, h as u16, color)
        .map_err(|e| IoError::Encode(e.to_string()))?;
    Ok(out)
}
