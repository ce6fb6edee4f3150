use rand::seq::SliceRandom;
use rand::Rng;

use super::{ConfidenceNetSpec, Dataset, DenoiserSpec};
use crate::error::{ensure, Error, Result};
use crate::imagecore::{add_noise, augment_dihedral, patch_offsets, Image, NoiseSpec};
use crate::nn::{adam_step, asymmetric_sse, mse_loss, AdamState, ModelParams, Network, Tensor, TrainConfig};
use crate::rng;

/// Denoiser training setup beyond the optimiser settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenoiserTraining {
    pub spec: DenoiserSpec,
    pub patch: usize,
    /// Noise level (8-bit scale) of the synthetic training pairs.
    pub sigma: f64,
}

impl Default for DenoiserTraining {
    fn default() -> Self {
        Self {
            spec: DenoiserSpec::default(),
            patch: 40,
            sigma: 25.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainedDenoiser {
    pub params: ModelParams<f32>,
    /// Mean per-sample training loss of each epoch.
    pub losses: Vec<f64>,
}

fn check_finite(epoch: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { epoch, loss })
    }
}

/// Accumulates one sample's gradients; returns its loss.
fn accumulate_sample(
    net: &Network,
    params: &ModelParams<f32>,
    grads: &mut ModelParams<f32>,
    input: &Tensor<f32>,
    loss_fn: impl Fn(&Tensor<f32>) -> Result<(f64, Tensor<f32>)>,
) -> Result<f64> {
    let trace = net.forward_trace(params, input)?;
    let (loss, grad_out) = loss_fn(trace.last().expect("non-empty trace"))?;
    let (g, _) = net.backward(params, &trace, &grad_out)?;
    grads.accumulate(&g)?;
    Ok(loss)
}

/// Runs one minibatch step when `pending` samples have been accumulated.
fn apply_batch(
    params: &mut ModelParams<f32>,
    grads: &mut ModelParams<f32>,
    pending: usize,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    grads.scale(1.0 / pending as f64);
    adam_step(params, grads, state, config)?;
    *grads = grads.zeros_like();
    Ok(())
}

/// Residual learning on synthetic Gaussian noise: the network predicts the
/// noise added to clean patches. Patches are re-noised and randomly
/// augmented each epoch.
pub fn train_denoiser(
    images: &[Image<f64>],
    config: &TrainConfig,
    training: &DenoiserTraining,
) -> Result<TrainedDenoiser> {
    config.validate()?;
    NoiseSpec::gaussian(training.sigma, 0).validate()?;
    let mut patches = Vec::new();
    for img in images {
        if img.height() < training.patch || img.width() < training.patch {
            continue;
        }
        for (y, x) in patch_offsets(img.height(), img.width(), training.patch, training.patch)? {
            patches.push(Image::from_fn(training.patch, training.patch, |py, px| img[(y + py, x + px)]));
        }
    }
    ensure!(
        !patches.is_empty(),
        InvalidParameter,
        "no training image is at least {0}x{0}",
        training.patch
    );

    let net = training.spec.network();
    let mut params = net.init::<f32>(config.seed);
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut losses = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..patches.len()).collect();
    for epoch in 0..config.epochs {
        let mut r = rng::stream(config.seed, &[0xDE, epoch as u64]);
        order.shuffle(&mut r);
        let mut total = 0.0;
        let mut pending = 0;
        for &i in &order {
            let clean = augment_dihedral(&patches[i], r.random_range(0..8))?;
            let noisy = add_noise(&clean, &NoiseSpec::gaussian(training.sigma, r.random()))?;
            let noise = noisy.zip_map(&clean, |a, b| a - b)?;
            let input = Tensor::from_images(&[&noisy.cast::<f32>()])?;
            let target = Tensor::from_images(&[&noise.cast::<f32>()])?;
            total += accumulate_sample(&net, &params, &mut grads, &input, |out| mse_loss(out, &target))?;
            pending += 1;
            if pending == config.batch_size {
                apply_batch(&mut params, &mut grads, pending, &mut state, config)?;
                pending = 0;
            }
        }
        if pending > 0 {
            apply_batch(&mut params, &mut grads, pending, &mut state, config)?;
        }
        let loss = total / patches.len() as f64;
        check_finite(epoch, loss)?;
        losses.push(loss);
    }
    Ok(TrainedDenoiser { params, losses })
}

/// Seeded 90/10 split into `(train, validation)` indices.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    ensure!(n >= 2, InvalidParameter, "need at least two items to split, got {n}");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[0x5917]));
    let n_val = ((n as f64 * 0.1).round() as usize).clamp(1, n - 1);
    let val = idx.split_off(n - n_val);
    Ok((idx, val))
}

#[derive(Clone, Debug)]
pub struct ConfidenceTraining {
    pub params: ModelParams<f32>,
    /// Mean per-region asymmetric loss on the training split, per epoch.
    pub train_loss: Vec<f64>,
    /// The same on the validation split, evaluated after each epoch.
    pub val_loss: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Mean per-region asymmetric loss of `params` over `indices`.
pub fn evaluate_confidence(
    params: &ModelParams<f32>,
    dataset: &Dataset,
    indices: &[usize],
    config: &TrainConfig,
) -> Result<f64> {
    let net = ConfidenceNetSpec.network();
    let (mut total, mut count) = (0.0, 0);
    for &i in indices {
        let item = &dataset.items[i];
        let out = net.forward(params, &item.input)?;
        let target = Tensor::from_images(&[&item.target])?;
        total += asymmetric_sse(&out, &target, config.p_under, config.p_over)?.0;
        count += target.len();
    }
    Ok(total / count as f64)
}

/// Loss of predicting `value` everywhere, in the units of
/// [`evaluate_confidence`].
pub fn constant_baseline_loss(dataset: &Dataset, indices: &[usize], value: f32, config: &TrainConfig) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0);
    for &i in indices {
        let target = Tensor::from_images(&[&dataset.items[i].target])?;
        let constant = Tensor::filled(target.shape(), value);
        total += asymmetric_sse(&constant, &target, config.p_under, config.p_over)?.0;
        count += target.len();
    }
    Ok(total / count as f64)
}

/// Optimises the asymmetric loss on a seeded 90 % split and tracks the
/// loss on the held-out 10 %.
pub fn train_confidence(dataset: &Dataset, config: &TrainConfig) -> Result<ConfidenceTraining> {
    config.validate()?;
    let (train_indices, val_indices) = split_indices(dataset.len(), config.seed)?;
    let net = ConfidenceNetSpec.network();
    let mut params = net.init::<f32>(config.seed);
    let mut state = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut val_loss = Vec::with_capacity(config.epochs);
    let mut order = train_indices.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::stream(config.seed, &[0xC0, epoch as u64]));
        let (mut total, mut count, mut pending) = (0.0, 0, 0);
        for &i in &order {
            let item = &dataset.items[i];
            let target = Tensor::from_images(&[&item.target])?;
            total += accumulate_sample(&net, &params, &mut grads, &item.input, |out| {
                asymmetric_sse(out, &target, config.p_under, config.p_over)
            })?;
            count += target.len();
            pending += 1;
            if pending == config.batch_size {
                apply_batch(&mut params, &mut grads, pending, &mut state, config)?;
                pending = 0;
            }
        }
        if pending > 0 {
            apply_batch(&mut params, &mut grads, pending, &mut state, config)?;
        }
        let loss = total / count as f64;
        check_finite(epoch, loss)?;
        train_loss.push(loss);
        val_loss.push(evaluate_confidence(&params, dataset, &val_indices, config)?);
    }
    Ok(ConfidenceTraining {
        params,
        train_loss,
        val_loss,
        train_indices,
        val_indices,
    })
}
