//! The end-to-end flow: reliable filter and learned denoiser side by side,
//! plus the confidence estimate that links them.

use crate::error::{ensure, Error, Result};
use crate::filters::{reliable_denoise, FilterKind, ReliableFilterSpec};
use crate::fusion::ConfidenceMap;
use crate::imagecore::{pad_reflect_to_multiple, Image};
use crate::models::{confidence_input, predict_confidence, Denoiser, REGION};
use crate::nn::ModelParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Denoise,
    SuperResolution,
}

/// Everything fusion needs for one input.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub noisy: Image<f64>,
    pub reliable: Image<f64>,
    /// Learned (hallucinatory) result.
    pub dnn: Image<f64>,
    /// `noisy - dnn` in denoising mode; `dnn - reliable` for super-resolution.
    pub residual: Image<f64>,
    pub confidence: Option<ConfidenceMap<f64>>,
}

/// Loaded models. Either may be absent; operations that need a missing
/// model fail with [`Error::ModelMissing`].
#[derive(Clone, Debug, Default)]
pub struct Pipeline {
    pub denoiser: Option<Denoiser>,
    pub confidence: Option<ModelParams<f32>>,
}

impl Pipeline {
    pub fn new(denoiser: Option<Denoiser>, confidence: Option<ModelParams<f32>>) -> Result<Self> {
        if let Some(params) = &confidence {
            crate::models::ConfidenceNetSpec.network().check_params(params)?;
        }
        Ok(Self { denoiser, confidence })
    }

    pub fn denoiser(&self) -> Result<&Denoiser> {
        self.denoiser
            .as_ref()
            .ok_or_else(|| Error::ModelMissing("no denoiser parameters loaded".into()))
    }

    /// Confidence map for any image size: inputs are reflect-padded to a
    /// multiple of 8 and the map covers `ceil(H/8) x ceil(W/8)` regions.
    pub fn predict_confidence(
        &self,
        noisy: &Image<f64>,
        reliable: &Image<f64>,
        residual: &Image<f64>,
    ) -> Result<ConfidenceMap<f64>> {
        let params = self
            .confidence
            .as_ref()
            .ok_or_else(|| Error::ModelMissing("no confidence parameters loaded".into()))?;
        let pad = |img: &Image<f64>| pad_reflect_to_multiple(img, REGION).cast::<f32>();
        let input = confidence_input(&pad(noisy), &pad(reliable), &pad(residual))?;
        Ok(predict_confidence(&input, params)?.cast())
    }

    /// Denoising mode. The confidence map is filled in when a confidence
    /// model is loaded.
    pub fn denoise(&self, noisy: &Image<f64>, filter: &ReliableFilterSpec) -> Result<Artifacts> {
        ensure!(
            filter.kind != FilterKind::BicubicUpscale,
            InvalidParameter,
            "bicubic upscaling is a super-resolution filter"
        );
        let reliable = reliable_denoise(noisy, filter)?;
        let (dnn, residual) = self.denoiser()?.denoise(noisy)?;
        let confidence = match self.confidence {
            Some(_) => Some(self.predict_confidence(noisy, &reliable, &residual)?),
            None => None,
        };
        Ok(Artifacts {
            noisy: noisy.clone(),
            reliable,
            dnn,
            residual,
            confidence,
        })
    }

    /// Super-resolution mode: bicubic upscaling is the reliable result and
    /// an externally produced high-resolution image the learned one. No
    /// confidence is estimated.
    pub fn super_resolve(low: &Image<f64>, high: &Image<f64>, filter: &ReliableFilterSpec) -> Result<Artifacts> {
        ensure!(
            filter.kind == FilterKind::BicubicUpscale,
            InvalidParameter,
            "super-resolution needs the bicubic_upscale filter, got {}",
            filter.kind
        );
        filter.validate()?;
        let (h, w) = (low.height() * filter.scale, low.width() * filter.scale);
        ensure!(
            high.dims() == (h, w),
            DimensionMismatch,
            "high-resolution image is {}x{}, expected {h}x{w}",
            high.height(),
            high.width()
        );
        let reliable = reliable_denoise(low, filter)?;
        let residual = high.zip_map(&reliable, |a, b| a - b)?;
        Ok(Artifacts {
            noisy: low.clone(),
            reliable,
            dnn: high.clone(),
            residual,
            confidence: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ConfidenceNetSpec, DenoiserSpec};

    fn pipeline() -> Pipeline {
        let denoiser = Denoiser::new(DenoiserSpec::new(3, 4).unwrap().init(1)).unwrap();
        Pipeline::new(Some(denoiser), Some(ConfidenceNetSpec.init(2))).unwrap()
    }

    #[test]
    fn ragged_input_gets_ceiling_confidence_grid() {
        let noisy = Image::from_fn(21, 30, |y, x| ((y + 2 * x) % 9) as f64 / 9.0);
        let a = pipeline().denoise(&noisy, &ReliableFilterSpec::default()).unwrap();
        let c = a.confidence.unwrap();
        assert_eq!((c.rows(), c.cols()), (3, 4));
        assert_eq!(a.dnn.dims(), (21, 30));
    }

    #[test]
    fn missing_models_are_reported() {
        let empty = Pipeline::default();
        let img = Image::filled(8, 8, 0.5);
        assert!(matches!(
            empty.denoise(&img, &ReliableFilterSpec::default()),
            Err(Error::ModelMissing(_))
        ));
        assert!(matches!(empty.predict_confidence(&img, &img, &img), Err(Error::ModelMissing(_))));
    }

    #[test]
    fn super_resolution_checks_sizes_and_filter() {
        let low = Image::filled(4, 5, 0.25);
        let spec = ReliableFilterSpec::with_kind(FilterKind::BicubicUpscale);
        let a = Pipeline::super_resolve(&low, &Image::filled(16, 20, 0.3), &spec).unwrap();
        assert_eq!(a.reliable.dims(), (16, 20));
        assert!(a.confidence.is_none());
        assert!(Pipeline::super_resolve(&low, &Image::filled(16, 16, 0.3), &spec).is_err());
        assert!(Pipeline::super_resolve(&low, &Image::filled(16, 20, 0.3), &ReliableFilterSpec::default()).is_err());
        assert!(pipeline().denoise(&low, &spec).is_err());
    }
}
