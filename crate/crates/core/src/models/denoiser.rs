use crate::error::{ensure, Result};
use crate::imagecore::Image;
use crate::nn::{ModelParams, Network, Tensor};
use crate::Scalar;

/// Plain residual CNN: 3x3 convolutions with ReLU in between and no
/// activation on the single-channel output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenoiserSpec {
    pub depth: usize,
    pub width: usize,
}

impl Default for DenoiserSpec {
    fn default() -> Self {
        Self { depth: 8, width: 32 }
    }
}

impl DenoiserSpec {
    pub fn new(depth: usize, width: usize) -> Result<Self> {
        ensure!(depth >= 2, InvalidParameter, "denoiser depth must be at least 2, got {depth}");
        ensure!(width >= 1, InvalidParameter, "denoiser width must be positive");
        Ok(Self { depth, width })
    }

    pub fn network(&self) -> Network {
        let mut net = Network::new().conv(1, self.width, 3).relu();
        for _ in 0..self.depth - 2 {
            net = net.conv(self.width, self.width, 3).relu();
        }
        net.conv(self.width, 1, 3)
    }

    /// Recovers depth and width from a parameter set and checks the layout.
    pub fn from_params<T: Scalar>(params: &ModelParams<T>) -> Result<Self> {
        ensure!(
            params.len() >= 4 && params.len() % 2 == 0,
            DimensionMismatch,
            "denoiser needs weight/bias pairs for at least two layers, found {} tensors",
            params.len()
        );
        let first = params
            .get("conv1.weight")
            .ok_or_else(|| crate::Error::DimensionMismatch("missing conv1.weight".into()))?;
        let spec = Self::new(params.len() / 2, first.shape()[0])?;
        spec.network().check_params(params)?;
        Ok(spec)
    }

    pub fn init(&self, seed: u64) -> ModelParams<f32> {
        self.network().init(seed)
    }
}

/// Runs the network on `noisy` and returns `(noisy - residual, residual)`.
pub fn denoise_dnn<T: Scalar>(
    noisy: &Image<T>,
    params: &ModelParams<T>,
    spec: &DenoiserSpec,
) -> Result<(Image<T>, Image<T>)> {
    let input = Tensor::from_images(&[noisy])?;
    let residual = spec.network().forward(params, &input)?.channel(0)?;
    let denoised = noisy.zip_map(&residual, |y, n| y - n)?;
    Ok((denoised, residual))
}

/// Trained denoiser parameters with their architecture, ready for `f64`
/// images.
#[derive(Clone, Debug)]
pub struct Denoiser {
    spec: DenoiserSpec,
    params: ModelParams<f32>,
}

impl Denoiser {
    pub fn new(params: ModelParams<f32>) -> Result<Self> {
        let spec = DenoiserSpec::from_params(&params)?;
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> DenoiserSpec {
        self.spec
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    /// Runs in `f32`; the denoised image is formed in `f64` so that
    /// `denoised + residual` reproduces the input.
    pub fn denoise(&self, noisy: &Image<f64>) -> Result<(Image<f64>, Image<f64>)> {
        let input = Tensor::from_images(&[&noisy.cast::<f32>()])?;
        let residual = self.spec.network().forward(&self.params, &input)?.channel(0)?.cast::<f64>();
        let denoised = noisy.zip_map(&residual, |y, n| y - n)?;
        Ok((denoised, residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_leaves_input_alone() {
        let spec = DenoiserSpec::new(3, 4).unwrap();
        let params = spec.network().zeros::<f64>();
        let noisy = Image::from_fn(6, 5, |y, x| (y * 5 + x) as f64 / 30.0);
        let (denoised, residual) = denoise_dnn(&noisy, &params, &spec).unwrap();
        assert_eq!(denoised, noisy);
        assert!(residual.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_decomposes_the_input() {
        let d = Denoiser::new(DenoiserSpec::new(3, 4).unwrap().init(5)).unwrap();
        let noisy = Image::from_fn(9, 7, |y, x| ((y * 7 + x) as f64 * 0.37).sin() * 0.5 + 0.5);
        let (denoised, residual) = d.denoise(&noisy).unwrap();
        assert!(residual.pixels().iter().any(|&v| v != 0.0));
        let back = denoised.zip_map(&residual, |a, b| a + b).unwrap();
        assert!(back.max_abs_diff(&noisy) < 1e-6);
    }

    #[test]
    fn spec_recovered_from_params() {
        let spec = DenoiserSpec::new(5, 6).unwrap();
        assert_eq!(DenoiserSpec::from_params(&spec.init(0)).unwrap(), spec);
        assert_eq!(DenoiserSpec::default(), DenoiserSpec { depth: 8, width: 32 });
        let mut p = spec.init(0);
        p.push("extra", Tensor::zeros(&[1])).unwrap();
        assert!(DenoiserSpec::from_params(&p).is_err());
    }
}
