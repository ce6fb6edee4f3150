//! Fusion of a reliable image with a hallucinatory one, steered by a global
//! weight `w` (0 = reliable, 1 = hallucinatory) and optionally by a
//! confidence map.

mod dct;
mod dwt;

pub use dct::{dct_mask, fuse_dct, fuse_dct_guided, upsample_confidence, GUIDED_DCT_LEVELS};
pub use dwt::{
    band_alpha, fuse_dwt, fuse_dwt_corr, fuse_dwt_guided, fuse_dwt_patchwise, PATCH, PATCH_LEVELS,
};

use crate::error::{ensure, Error, Result};
use crate::imagecore::Image;
use crate::transforms::Wavelet;
use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FusionMethod {
    Dwt,
    DwtCorr,
    #[default]
    Dct,
}

impl std::str::FromStr for FusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dwt" => Ok(Self::Dwt),
            "dwt_corr" | "dwt-corr" => Ok(Self::DwtCorr),
            "dct" => Ok(Self::Dct),
            other => Err(Error::InvalidParameter(format!("unknown fusion method {other:?}"))),
        }
    }
}

impl std::fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dwt => "dwt",
            Self::DwtCorr => "dwt_corr",
            Self::Dct => "dct",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionParams {
    pub method: FusionMethod,
    /// Global fusion weight in `[0, 1]`.
    pub weight: f64,
    pub guided: bool,
    /// Confidence threshold of the region weight update.
    pub threshold: f64,
    /// Scale `a` of the DCT mask variance.
    pub mask_scale: f64,
    /// `eps` of the DCT mask variance.
    pub mask_eps: f64,
    /// Stabilizer of the coefficient similarity in `dwt_corr`.
    pub corr_eps: f64,
    /// Decomposition depth for whole-image DWT fusion.
    pub levels: usize,
    pub wavelet: Wavelet,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            method: FusionMethod::Dct,
            weight: 0.5,
            guided: false,
            threshold: 0.8,
            mask_scale: 0.1,
            mask_eps: 1e-3,
            corr_eps: 1e-6,
            levels: 3,
            wavelet: Wavelet::Haar,
        }
    }
}

impl FusionParams {
    pub fn new(method: FusionMethod, weight: f64) -> Self {
        Self {
            method,
            weight,
            ..Self::default()
        }
    }

    pub fn with_weight(&self, weight: f64) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..=1.0).contains(&self.weight),
            InvalidParameter,
            "fusion weight {} outside [0, 1]",
            self.weight
        );
        ensure!(
            (0.0..=1.0).contains(&self.threshold),
            InvalidParameter,
            "threshold {} outside [0, 1]",
            self.threshold
        );
        ensure!(self.mask_scale > 0.0, InvalidParameter, "mask scale must be positive");
        ensure!(self.mask_eps > 0.0, InvalidParameter, "mask epsilon must be positive");
        ensure!(self.corr_eps > 0.0, InvalidParameter, "correlation epsilon must be positive");
        ensure!(self.levels >= 1, InvalidParameter, "at least one DWT level is required");
        Ok(())
    }
}

/// Coarse per-region trust in the learned denoiser: one value in `[0, 1]`
/// per 8x8 block of the image, `ceil(H/8) x ceil(W/8)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceMap<T = f64> {
    grid: Image<T>,
}

impl<T: Scalar> ConfidenceMap<T> {
    pub fn new(grid: Image<T>) -> Result<Self> {
        ensure!(
            grid.pixels().iter().all(|v| (T::zero()..=T::one()).contains(v)),
            InvalidParameter,
            "confidence values must lie in [0, 1]"
        );
        Ok(Self { grid })
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self::new(Image::filled(rows, cols, value)).expect("value within [0, 1]")
    }

    /// Grid dimensions matching an image of the given size.
    pub fn dims_for(height: usize, width: usize) -> (usize, usize) {
        (height.div_ceil(PATCH), width.div_ceil(PATCH))
    }

    pub fn rows(&self) -> usize {
        self.grid.height()
    }

    pub fn cols(&self) -> usize {
        self.grid.width()
    }

    pub fn values(&self) -> &[T] {
        self.grid.pixels()
    }

    pub fn as_image(&self) -> &Image<T> {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.grid[(row, col)]
    }

    pub fn cast<U: Scalar>(&self) -> ConfidenceMap<U> {
        ConfidenceMap {
            grid: self.grid.cast(),
        }
    }

    pub(crate) fn check_covers(&self, height: usize, width: usize) -> Result<()> {
        let expected = Self::dims_for(height, width);
        ensure!(
            (self.rows(), self.cols()) == expected,
            DimensionMismatch,
            "confidence map is {}x{}, a {height}x{width} image needs {}x{}",
            self.rows(),
            self.cols(),
            expected.0,
            expected.1
        );
        Ok(())
    }
}

/// Region weight update `w * (1 + c - t)`, clamped to `[0, 1]`.
pub fn region_weight(weight: f64, confidence: f64, threshold: f64) -> f64 {
    (weight * (1.0 + confidence - threshold)).clamp(0.0, 1.0)
}

/// Fuses with the method selected in `params`. Guided fusion requires a
/// confidence map.
pub fn fuse<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    confidence: Option<&ConfidenceMap<T>>,
    params: &FusionParams,
) -> Result<Image<T>> {
    if params.guided {
        let conf = confidence.ok_or_else(|| {
            Error::InvalidParameter("guided fusion needs a confidence map".into())
        })?;
        match params.method {
            FusionMethod::Dct => fuse_dct_guided(reliable, hallucinatory, conf, params),
            FusionMethod::Dwt | FusionMethod::DwtCorr => {
                fuse_dwt_guided(reliable, hallucinatory, conf, params)
            }
        }
    } else {
        match params.method {
            FusionMethod::Dct => fuse_dct(reliable, hallucinatory, params),
            FusionMethod::Dwt => fuse_dwt(reliable, hallucinatory, params),
            FusionMethod::DwtCorr => fuse_dwt_corr(reliable, hallucinatory, params),
        }
    }
}

/// Shared precondition of every fusion entry point. Returns the bypass result
/// for the endpoint weights.
fn endpoints<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    params: &FusionParams,
) -> Result<Option<Image<T>>> {
    params.validate()?;
    reliable.check_same_dims(hallucinatory)?;
    Ok(if params.weight <= 0.0 {
        Some(reliable.clone())
    } else if params.weight >= 1.0 {
        Some(hallucinatory.clone())
    } else {
        None
    })
}
