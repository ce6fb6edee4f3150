//! Confidence-guided fusion of a reliable (filtered) denoising result with a
//! learned, possibly hallucinating, denoiser output.
//!
//! The numeric core is generic over [`Scalar`] (`f32` and `f64`). Pixel-domain
//! work defaults to `f64`; the neural networks train in `f32`.

pub mod error;
pub mod filters;
pub mod fusion;
pub mod imagecore;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synthetic;
pub mod transforms;
pub mod visual;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use filters::{FilterKind, ReliableFilterSpec};
pub use fusion::{ConfidenceMap, FusionMethod, FusionParams};
pub use imagecore::{Image, NoiseKind, NoiseSpec};
pub use nn::{ModelParams, Tensor, TrainConfig};
pub use transforms::{DctSpectrum, Wavelet, WaveletPyramid};

/// Double precision raster, the default pixel-domain currency.
pub type ImageF64 = Image<f64>;
/// Single precision raster.
pub type ImageF32 = Image<f32>;
pub type ConfidenceMapF64 = ConfidenceMap<f64>;
pub type DctSpectrumF64 = DctSpectrum<f64>;
pub type WaveletPyramidF64 = WaveletPyramid<f64>;
/// Network tensors and parameters as stored on disk.
pub type TensorF32 = Tensor<f32>;
pub type ModelParamsF32 = ModelParams<f32>;
/// Double precision tensors, used for gradient checking.
pub type TensorF64 = Tensor<f64>;
pub type ModelParamsF64 = ModelParams<f64>;
