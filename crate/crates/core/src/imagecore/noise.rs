use rand_distr::{Distribution, Normal, Poisson};

use super::Image;
use crate::error::{ensure, Result};
use crate::rng;
use crate::Scalar;

/// Floor applied to intensities when calibrating Poisson noise.
const POISSON_FLOOR: f64 = 1e-3;
pub const MAX_SIGMA: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Gaussian,
    Poisson,
}

impl std::str::FromStr for NoiseKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "poisson" => Ok(Self::Poisson),
            other => Err(crate::Error::InvalidParameter(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Synthetic noise description. `sigma` is on the 8-bit scale (0..=100).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            seed,
        }
    }

    pub fn poisson(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Poisson,
            sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..=MAX_SIGMA).contains(&self.sigma),
            InvalidParameter,
            "noise sigma {} outside [0, {MAX_SIGMA}]",
            self.sigma
        );
        Ok(())
    }
}

/// Photon-count scale `Q` such that `Poisson(img * Q) / Q` has an
/// image-average standard deviation of `sigma / 255`.
pub fn poisson_scale<T: Scalar>(img: &Image<T>, sigma: f64) -> f64 {
    let mean_root = img
        .pixels()
        .iter()
        .map(|p| p.as_f64().max(POISSON_FLOOR).sqrt())
        .sum::<f64>()
        / img.len() as f64;
    (mean_root * 255.0 / sigma).powi(2)
}

/// Corrupts `img` with noise drawn from a SplitMix64 stream seeded by
/// `spec.seed`. The output is not clamped.
pub fn add_noise<T: Scalar>(img: &Image<T>, spec: &NoiseSpec) -> Result<Image<T>> {
    spec.validate()?;
    if spec.sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = rng::seeded(spec.seed);
    match spec.kind {
        NoiseKind::Gaussian => {
            let normal = Normal::new(0.0, spec.sigma / 255.0).expect("positive std");
            Ok(img.map(|p| T::lit(p.as_f64() + normal.sample(&mut rng))))
        }
        NoiseKind::Poisson => {
            let q = poisson_scale(img, spec.sigma);
            Ok(img.map(|p| {
                let lambda = p.as_f64().max(0.0) * q;
                let count = if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive rate").sample(&mut rng)
                } else {
                    0.0
                };
                T::lit(count / q)
            }))
        }
    }
}
