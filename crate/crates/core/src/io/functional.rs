//! File-level helpers around the codecs.

use std::path::Path;

use super::{decode_jpeg, decode_png, encode_jpeg, encode_png, DecodedImage, ImageFormat, IoError};
use crate::image::Image;
use crate::tensor::TensorAllocator;

/// Reads and decodes a PNG or JPEG file. The format is decided by the file's
/// magic bytes, not its extension.
pub fn read_image_any(path: impl AsRef<Path>) -> Result<(DecodedImage, ImageFormat), IoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IoError::FileNotFound(path.to_path_buf()),
        _ => IoError::Io(e),
    })?;
    let format = ImageFormat::sniff(&bytes);
    let img = match format {
        ImageFormat::Png => decode_png(&bytes)?,
        ImageFormat::Jpeg => decode_jpeg(&bytes)?,
        ImageFormat::Unknown => return Err(IoError::UnknownFormat),
    };
    Ok((img, format))
}

/// Encodes `img` as JPEG and writes it to `path`.
pub fn write_image_jpeg<const C: usize, A: TensorAllocator>(
    path: impl AsRef<Path>,
    img: &Image<u8, C, A>,
    quality: u8,
) -> Result<(), IoError> {
    let bytes = encode_jpeg(img, quality)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Encodes `img` as PNG and writes it to `path`.
pub fn write_image_png<const C: usize, A: TensorAllocator>(
    path: impl AsRef<Path>,
    img: &Image<u8, C, A>,
) -> Result<(), IoError> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageSize;

    #[test]
    fn dispatch_by_magic() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::<u8, 3>::from_size_val(ImageSize::new(8, 8).unwrap(), 128).unwrap();

        let png_path = dir.path().join("a.png");
        write_image_png(&png_path, &img).unwrap();
        let (decoded, format) = read_image_any(&png_path).unwrap();
        assert_eq!(format, ImageFormat::Png);
        assert_eq!(decoded.into_u8::<3>().unwrap(), img);

        // JPEG payload behind a .png name decodes as JPEG
        let misnamed = dir.path().join("b.png");
        write_image_jpeg(&misnamed, &img, 90).unwrap();
        let (decoded, format) = read_image_any(&misnamed).unwrap();
        assert_eq!(format, ImageFormat::Jpeg);
        assert_eq!(decoded.channels(), 3);

        let junk = dir.path().join("c.png");
        std::fs::write(&junk, b"not an image").unwrap();
        assert!(matches!(read_image_any(&junk), Err(IoError::UnknownFormat)));

        assert!(matches!(
            read_image_any(dir.path().join("missing.png")),
            Err(IoError::FileNotFound(_))
        ));
    }
}
