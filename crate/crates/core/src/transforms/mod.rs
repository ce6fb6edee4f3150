//! Orthonormal 2-D DCT and multilevel 2-D DWT, each with an exact inverse.

mod dct;
mod dwt;

pub use dct::{dct2, idct2, DctSpectrum};
pub use dwt::{dwt2, idwt2, DetailBands, Wavelet, WaveletPyramid};
