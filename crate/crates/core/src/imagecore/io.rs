use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::Image;
use crate::error::{Error, Result};
use crate::Scalar;

const BT601: [f64; 3] = [0.299, 0.587, 0.114];

pub fn load_image(path: impl AsRef<Path>) -> Result<Image<f64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        Error::Unsupported(msg) => Error::Unsupported(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Decodes an 8-bit PNG or binary PGM. Color input is reduced to luma with the
/// BT.601 weights without intermediate quantization; alpha is ignored.
pub fn decode_image(bytes: &[u8]) -> Result<Image<f64>> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Unsupported(format!("{format:?} (expected PNG or PGM)")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match &decoded {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&b| b as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf
            .as_raw()
            .chunks_exact(2)
            .map(|p| p[0] as f64 / 255.0)
            .collect(),
        DynamicImage::ImageRgb8(buf) => luma(buf.as_raw(), 3),
        DynamicImage::ImageRgba8(buf) => luma(buf.as_raw(), 4),
        other => {
            return Err(Error::Unsupported(format!(
                "{:?} (only 8-bit samples are supported)",
                other.color()
            )))
        }
    };
    Image::new(h, w, pixels)
}

fn luma(raw: &[u8], stride: usize) -> Vec<f64> {
    raw.chunks_exact(stride)
        .map(|p| (BT601[0] * p[0] as f64 + BT601[1] * p[1] as f64 + BT601[2] * p[2] as f64) / 255.0)
        .collect()
}

/// Clamps to `[0, 1]` and quantizes round-half-up onto the 8-bit grid.
pub fn to_bytes<T: Scalar>(img: &Image<T>) -> Vec<u8> {
    img.pixels()
        .iter()
        .map(|p| {
            let v = p.as_f64();
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            (v * 255.0 + 0.5).floor() as u8
        })
        .collect()
}

pub fn encode_png_gray<T: Scalar>(img: &Image<T>) -> Vec<u8> {
    encode(
        &to_bytes(img),
        img.width(),
        img.height(),
        image::ExtendedColorType::L8,
        ImageFormat::Png,
    )
}

/// Encodes interleaved 8-bit RGB samples as PNG.
pub fn encode_png_rgb(rgb: &[u8], height: usize, width: usize) -> Vec<u8> {
    assert_eq!(rgb.len(), height * width * 3);
    encode(rgb, width, height, image::ExtendedColorType::Rgb8, ImageFormat::Png)
}

fn encode(
    raw: &[u8],
    width: usize,
    height: usize,
    color: image::ExtendedColorType,
    format: ImageFormat,
) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    image::write_buffer_with_format(&mut out, raw, width as u32, height as u32, color, format)
        .expect("encoding into memory cannot fail");
    out.into_inner()
}

/// Writes PNG or binary PGM (P5), chosen by file extension.
pub fn save_image<T: Scalar>(img: &Image<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let bytes = match ext.as_deref() {
        Some("png") => encode_png_gray(img),
        Some("pgm") => {
            let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
            out.extend(to_bytes(img));
            out
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "{}: output extension must be .png or .pgm",
                path.display()
            )))
        }
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_rgb_png(rgb: &[u8], height: usize, width: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_png_rgb(rgb, height, width)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_bytes_scale_to_unit_range() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0u8, 255, 128, 64]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn rgb_png_uses_bt601_luma() {
        let png = encode_png_rgb(&[255, 0, 0], 1, 1);
        let img = decode_image(&png).unwrap();
        assert!((img[(0, 0)] - 0.299).abs() < 1e-12);
    }

    #[test]
    fn quantization_clamps_and_rounds_half_up() {
        let img = Image::new(1, 3, vec![1.2, 0.5, -0.1]).unwrap();
        assert_eq!(to_bytes(&img), vec![255, 128, 0]);
    }

    #[test]
    fn sixteen_bit_pgm_is_rejected() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend([0u8, 1]);
        assert!(matches!(decode_image(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn garbage_is_a_decode_error() {
        assert!(decode_image(b"definitely not an image").is_err());
    }

    #[test]
    fn save_then_load_lands_on_the_byte_grid() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(5, 7, |y, x| (y * 7 + x) as f64 / 40.0 - 0.1);
        for name in ["a.png", "a.pgm"] {
            let path = dir.path().join(name);
            save_image(&img, &path).unwrap();
            let back = load_image(&path).unwrap();
            let expected = img.map(|p| (p.clamp(0.0, 1.0) * 255.0 + 0.5).floor() / 255.0);
            assert_eq!(back, expected, "{name}");
        }
    }

    #[test]
    fn unknown_extension_is_rejected() {
        let img = Image::<f64>::zeros(2, 2);
        assert!(save_image(&img, "/tmp/out.bmp").is_err());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_image("/nonexistent/x.png").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.png"));
    }
}
