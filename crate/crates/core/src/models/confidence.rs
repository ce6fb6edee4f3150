use crate::error::{ensure, Result};
use crate::fusion::ConfidenceMap;
use crate::imagecore::{pad_reflect_to_multiple, Image};
use crate::nn::{ModelParams, Network, Tensor};
use crate::Scalar;

/// Side length of a confidence region in pixels.
pub const REGION: usize = 8;

/// Three conv-ReLU-pool blocks (3 -> 16 -> 32 -> 32 channels) followed by a
/// 1x1 convolution and a sigmoid. Output is 8x smaller on each axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfidenceNetSpec;

impl ConfidenceNetSpec {
    pub const CHANNELS: [usize; 4] = [3, 16, 32, 32];

    pub fn network(&self) -> Network {
        let c = Self::CHANNELS;
        Network::new()
            .conv(c[0], c[1], 3)
            .relu()
            .avgpool2()
            .conv(c[1], c[2], 3)
            .relu()
            .avgpool2()
            .conv(c[2], c[3], 3)
            .relu()
            .avgpool2()
            .conv(c[3], 1, 1)
            .sigmoid()
    }

    pub fn init(&self, seed: u64) -> ModelParams<f32> {
        self.network().init(seed)
    }
}

/// Stacks the network input in its fixed channel order: noisy, reliable,
/// signed residual.
pub fn confidence_input<T: Scalar>(
    noisy: &Image<T>,
    reliable: &Image<T>,
    residual: &Image<T>,
) -> Result<Tensor<T>> {
    Tensor::from_images(&[noisy, reliable, residual])
}

/// Forward pass of the confidence net. Input dims must be multiples of 8.
pub fn predict_confidence<T: Scalar>(input: &Tensor<T>, params: &ModelParams<T>) -> Result<ConfidenceMap<T>> {
    let (c, h, w) = input.dims3()?;
    ensure!(
        c == ConfidenceNetSpec::CHANNELS[0],
        DimensionMismatch,
        "confidence input needs 3 channels, got {c}"
    );
    ensure!(
        h % REGION == 0 && w % REGION == 0,
        DimensionMismatch,
        "confidence input dims must be multiples of {REGION}, got {h}x{w}"
    );
    let out = ConfidenceNetSpec.network().forward(params, input)?;
    // Clamp guards against f32 rounding at saturation.
    ConfidenceMap::new(out.channel(0)?.map(|v| v.clamp_to(T::zero(), T::one())))
}

/// Regional ground truth: `1 - mean|clean - dnn| * 255 / sigma_max` over each
/// 8x8 block, clamped to `[0, 1]`. Ragged edges are reflect-padded.
pub fn confidence_ground_truth<T: Scalar>(
    clean: &Image<T>,
    dnn_denoised: &Image<T>,
    sigma_max: f64,
) -> Result<ConfidenceMap<T>> {
    clean.check_same_dims(dnn_denoised)?;
    ensure!(
        sigma_max > 0.0 && sigma_max.is_finite(),
        InvalidParameter,
        "sigma_max must be positive, got {sigma_max}"
    );
    let err = clean.zip_map(dnn_denoised, |a, b| (a - b).abs())?;
    let err = pad_reflect_to_multiple(&err, REGION);
    let (rows, cols) = (err.height() / REGION, err.width() / REGION);
    let scale = 255.0 / sigma_max / (REGION * REGION) as f64;
    let grid = Image::from_fn(rows, cols, |gy, gx| {
        let mut sum = 0.0;
        for y in gy * REGION..(gy + 1) * REGION {
            sum += err.row(y)[gx * REGION..(gx + 1) * REGION].iter().map(|v| v.as_f64()).sum::<f64>();
        }
        T::lit((1.0 - sum * scale).clamp(0.0, 1.0))
    });
    ConfidenceMap::new(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_eight_times_smaller() {
        let params = ConfidenceNetSpec.init(0);
        for (h, w) in [(40, 40), (80, 80), (16, 24)] {
            let input = Tensor::<f32>::filled(&[3, h, w], 0.5);
            let map = predict_confidence(&input, &params).unwrap();
            assert_eq!((map.rows(), map.cols()), (h / 8, w / 8));
            assert!(map.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert!(predict_confidence(&Tensor::<f32>::zeros(&[3, 12, 16]), &params).is_err());
        assert!(predict_confidence(&Tensor::<f32>::zeros(&[2, 16, 16]), &params).is_err());
    }

    #[test]
    fn zero_head_gives_one_half() {
        let mut params = ConfidenceNetSpec.init(0);
        for name in ["conv4.weight", "conv4.bias"] {
            let shape = params.get(name).unwrap().shape().to_vec();
            let idx = params.names().position(|n| n == name).unwrap();
            *params.tensor_mut(idx) = Tensor::zeros(&shape);
        }
        let map = predict_confidence(&Tensor::<f32>::filled(&[3, 16, 16], 0.3), &params).unwrap();
        assert!(map.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn ground_truth_examples() {
        let clean = Image::filled(16, 16, 0.5);
        let ones = confidence_ground_truth(&clean, &clean, 100.0).unwrap();
        assert!(ones.values().iter().all(|&v| v == 1.0));
        let off = clean.map(|v| v + 10.0 / 255.0);
        let c = confidence_ground_truth(&clean, &off, 100.0).unwrap();
        assert!(c.values().iter().all(|&v: &f64| (v - 0.9).abs() < 1e-12));
        let edge = clean.map(|v| v - 100.0 / 255.0);
        assert!(confidence_ground_truth(&clean, &edge, 100.0).unwrap().values().iter().all(|&v| v < 1e-12));
        let far = clean.map(|v| v - 120.0 / 255.0);
        assert!(confidence_ground_truth(&clean, &far, 100.0).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ragged_sizes_round_up() {
        let a = Image::filled(10, 17, 0.2);
        let c = confidence_ground_truth(&a, &a, 100.0).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 3));
    }
}
