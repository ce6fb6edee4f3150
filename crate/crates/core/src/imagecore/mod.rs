//! Grayscale rasters and the primitives every other module builds on.

mod geometry;
mod io;
mod noise;

pub use geometry::{
    augment_dihedral, crop, dihedral_inverse, extract_patches, pad_reflect_to_multiple,
    patch_offsets, reflect_index, resize_bicubic,
};
pub use io::{
    decode_image, encode_png_gray, encode_png_rgb, load_image, save_image, save_rgb_png,
    to_bytes,
};
pub use noise::{add_noise, poisson_scale, NoiseKind, NoiseSpec, MAX_SIGMA};

use std::ops::{Index, IndexMut};

use crate::error::{ensure, Result};
use crate::Scalar;

/// Row-major 2-D raster.
///
/// Pixel values nominally live in `[0, 1]` but arithmetic may push them
/// outside; only [`save_image`] clamps. Transform coefficient planes reuse this
/// type.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T = f64> {
    height: usize,
    width: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(height: usize, width: usize, pixels: Vec<T>) -> Result<Self> {
        ensure!(
            height > 0 && width > 0,
            InvalidParameter,
            "image dimensions must be positive, got {height}x{width}"
        );
        ensure!(
            pixels.len() == height * width,
            DimensionMismatch,
            "{} pixels for a {height}x{width} image",
            pixels.len()
        );
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [T] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, y: usize) -> &mut [T] {
        &mut self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Elementwise combination of two equally sized images.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            pixels: self
                .pixels
                .iter()
                .zip(&other.pixels)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        ensure!(
            self.dims() == other.dims(),
            DimensionMismatch,
            "{}x{} vs {}x{}",
            self.height,
            self.width,
            other.height,
            other.width
        );
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|p| p.cast()).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|p| p.as_f64()).sum::<f64>() / self.len() as f64
    }

    pub fn clamp_unit(&self) -> Self {
        self.map(|p| p.clamp_to(T::zero(), T::one()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }
}

impl<T> Index<(usize, usize)> for Image<T> {
    type Output = T;

    #[inline]
    fn index(&self, (y, x): (usize, usize)) -> &T {
        &self.pixels[y * self.width + x]
    }
}

impl<T> IndexMut<(usize, usize)> for Image<T> {
    #[inline]
    fn index_mut(&mut self, (y, x): (usize, usize)) -> &mut T {
        &mut self.pixels[y * self.width + x]
    }
}
