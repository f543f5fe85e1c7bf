use std::io::Cursor;

use ::png::{BitDepth, ColorType, Decoder, Encoder, Limits, Transformations};

use super::{DecodedImage, IoError, PNG_MAGIC};
use crate::image::{Image, ImageSize};
use crate::tensor::TensorAllocator;

// large enough for 8K RGBA16 frames
const DECODE_LIMIT_BYTES: usize = 1 << 30;
// deflate cannot expand data by more than about 1032:1
const MAX_DEFLATE_RATIO: u64 = 1032;

fn corrupt(e: impl std::fmt::Display) -> IoError {
    IoError::CorruptStream(e.to_string())
}

/// Decodes a PNG stream.
///
/// Palette and sub-byte grayscale images are expanded to 8 bits per sample
/// (palette transparency becomes an alpha channel). 16-bit images decode to
/// `u16` samples in native byte order.
pub fn decode_png(bytes: &[u8]) -> Result<DecodedImage, IoError> {
    if !bytes.starts_with(&PNG_MAGIC) {
        return Err(IoError::CorruptStream("missing PNG signature".into()));
    }
    let mut decoder = Decoder::new_with_limits(
        Cursor::new(bytes),
        Limits {
            bytes: DECODE_LIMIT_BYTES,
        },
    );
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(corrupt)?;

    let info = reader.info();
    if info.interlaced && !cfg!(feature = "interlaced-png") {
        return Err(IoError::UnsupportedPngFeature(
            "interlaced streams (enable the `interlaced-png` feature)".into(),
        ));
    }
    let size = ImageSize::new(info.width as usize, info.height as usize)?;
    // reject headers promising more pixels than the stream could hold
    // before allocating the output
    let raw_bytes = (info.raw_row_length() as u64).saturating_mul(info.height as u64);
    if raw_bytes > MAX_DEFLATE_RATIO.saturating_mul(bytes.len() as u64) {
        return Err(IoError::CorruptStream(
            "image data shorter than the header dimensions require".into(),
        ));
    }
    if !reader
        .output_buffer_size()
        .is_some_and(|n| n <= DECODE_LIMIT_BYTES)
    {
        return Err(IoError::DimensionsTooLarge {
            width: size.width(),
            height: size.height(),
            format: "PNG",
        });
    }
    let (color, depth) = reader.output_color_type();

    macro_rules! decode_into {
        ($variant:ident, $t:ty, $c:literal) => {{
            let mut img = Image::<$t, $c>::from_size_val(size, 0)?;
            reader.next_frame(img.as_bytes_mut()).map_err(corrupt)?;
            if std::mem::size_of::<$t>() == 2 {
                swap_be_samples(img.as_bytes_mut());
            }
            DecodedImage::$variant(img)
        }};
    }

    let decoded = match (color, depth) {
        (ColorType::Grayscale, BitDepth::Eight) => decode_into!(Gray8, u8, 1),
        (ColorType::GrayscaleAlpha, BitDepth::Eight) => decode_into!(GrayAlpha8, u8, 2),
        (ColorType::Rgb, BitDepth::Eight) => decode_into!(Rgb8, u8, 3),
        (ColorType::Rgba, BitDepth::Eight) => decode_into!(Rgba8, u8, 4),
        (ColorType::Grayscale, BitDepth::Sixteen) => decode_into!(Gray16, u16, 1),
        (ColorType::GrayscaleAlpha, BitDepth::Sixteen) => decode_into!(GrayAlpha16, u16, 2),
        (ColorType::Rgb, BitDepth::Sixteen) => decode_into!(Rgb16, u16, 3),
        (ColorType::Rgba, BitDepth::Sixteen) => decode_into!(Rgba16, u16, 4),
        (color, depth) => {
            return Err(IoError::UnsupportedPngFeature(format!(
                "output layout {color:?} at {depth:?}"
            )))
        }
    };
    // a stream cut anywhere before IEND counts as truncated
    reader.finish().map_err(corrupt)?;
    Ok(decoded)
}

/// Converts big-endian 16-bit samples in place to native order.
fn swap_be_samples(bytes: &mut [u8]) {
    for pair in bytes.chunks_exact_mut(2) {
        let v = u16::from_be_bytes([pair[0], pair[1]]);
        pair.copy_from_slice(&v.to_ne_bytes());
    }
}

fn color_type_for(channels: usize) -> Result<ColorType, IoError> {
    match channels {
        1 => Ok(ColorType::Grayscale),
        2 => Ok(ColorType::GrayscaleAlpha),
        3 => Ok(ColorType::Rgb),
        4 => Ok(ColorType::Rgba),
        _ => Err(IoError::UnsupportedChannelCount {
            channels,
            format: "PNG",
        }),
    }
}

fn encode_raw(
    size: ImageSize,
    channels: usize,
    depth: BitDepth,
    samples: &[u8],
) -> Result<Vec<u8>, IoError> {
    let color = color_type_for(channels)?;
    let (w, h) = (size.width(), size.height());
    let (Ok(w32), Ok(h32)) = (u32::try_from(w), u32::try_from(h)) else {
        return Err(IoError::DimensionsTooLarge {
            width: w,
            height: h,
            format: "PNG",
        });
    };
    let mut out = Vec::new();
    let mut encoder = Encoder::new(&mut out, w32, h32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let mut writer = encoder
        .write_header()
        .map_err(|e| IoError::Encode(e.to_string()))?;
    writer
        .write_image_data(samples)
        .map_err(|e| IoError::Encode(e.to_string()))?;
    writer.finish().map_err(|e| IoError::Encode(e.to_string()))?;
    Ok(out)
}

/// Encodes an 8-bit image with 1 (gray), 2 (gray + alpha), 3 (RGB) or 4
/// (RGBA) channels as PNG.
pub fn encode_png<const C: usize, A: TensorAllocator>(
    img: &Image<u8, C, A>,
) -> Result<Vec<u8>, IoError> {
    encode_raw(img.size(), C, BitDepth::Eight, img.as_slice())
}

/// Encodes a 16-bit image as PNG.
pub fn encode_png_u16<const C: usize, A: TensorAllocator>(
    img: &Image<u16, C, A>,
) -> Result<Vec<u8>, IoError> {
    let mut be = Vec::with_capacity(img.as_slice().len() * 2);
    for v in img.as_slice() {
        be.extend_from_slice(&v.to_be_bytes());
    }
    encode_raw(img.size(), C, BitDepth::Sixteen, &be)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(w: usize, h: usize) -> ImageSize {
        ImageSize::new(w, h).unwrap()
    }

    #[test]
    fn gray_uses_color_type_zero() {
        let img = Image::<u8, 1>::from_size_slice(size(2, 1), &[3, 200]).unwrap();
        let bytes = encode_png(&img).unwrap();
        // IHDR: signature(8) + length(4) + "IHDR"(4) + w(4) + h(4) + depth(1) + color(1)
        assert_eq!(bytes[24], 8);
        assert_eq!(bytes[25], 0);
        let back = decode_png(&bytes).unwrap().into_u8::<1>().unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rgb_and_rgba_color_types() {
        let rgb = Image::<u8, 3>::from_size_val(size(1, 1), 9).unwrap();
        assert_eq!(encode_png(&rgb).unwrap()[25], 2);
        let rgba = Image::<u8, 4>::from_size_val(size(1, 1), 9).unwrap();
        assert_eq!(encode_png(&rgba).unwrap()[25], 6);
    }

    #[test]
    fn sixteen_bit_roundtrip() {
        let data: Vec<u16> = (0..12).map(|i| i * 5000 + 7).collect();
        let img = Image::<u16, 3>::from_size_slice(size(2, 2), &data).unwrap();
        let bytes = encode_png_u16(&img).unwrap();
        let back = decode_png(&bytes).unwrap();
        assert_eq!(back.bit_depth(), 16);
        assert_eq!(back.into_u16::<3>().unwrap(), img);
    }

    #[test]
    fn truncated_stream_is_corrupt() {
        let img = Image::<u8, 3>::from_size_val(size(16, 16), 77).unwrap();
        let bytes = encode_png(&img).unwrap();
        for cut in [8, 20, 33, bytes.len() / 2, bytes.len() - 4] {
            assert!(
                matches!(decode_png(&bytes[..cut]), Err(IoError::CorruptStream(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn jpeg_bytes_are_not_png() {
        assert!(matches!(
            decode_png(&[0xff, 0xd8, 0xff, 0xe0, 0, 0]),
            Err(IoError::CorruptStream(_))
        ));
    }

    #[test]
    fn unsupported_channel_count() {
        let img = Image::<u8, 5>::from_size_val(size(1, 1), 0).unwrap();
        assert!(matches!(
            encode_png(&img),
            Err(IoError::UnsupportedChannelCount { channels: 5, .. })
        ));
    }
}
