use super::ModelParams;
use crate::error::{ensure, Result};
use crate::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimisation settings shared by both training loops.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Loss weight where the prediction is below its target.
    pub p_under: f64,
    /// Loss weight where the prediction is at or above its target.
    pub p_over: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            batch_size: 16,
            epochs: 30,
            seed: 0,
            p_under: 1.0,
            p_over: 4.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            InvalidParameter,
            "learning rate must be positive, got {}",
            self.learning_rate
        );
        ensure!(
            self.weight_decay >= 0.0 && self.weight_decay.is_finite(),
            InvalidParameter,
            "weight decay must be non-negative, got {}",
            self.weight_decay
        );
        ensure!(self.batch_size > 0, InvalidParameter, "batch size must be positive");
        ensure!(
            self.p_under > 0.0 && self.p_over >= self.p_under && self.p_over.is_finite(),
            InvalidParameter,
            "penalties need p_over >= p_under > 0, got p_under={} p_over={}",
            self.p_under,
            self.p_over
        );
        Ok(())
    }
}

/// First and second moment estimates, laid out like the parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<T: Scalar>(params: &ModelParams<T>) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. Weight decay is decoupled: every
/// parameter is first scaled by `1 - lr * wd`.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    params.check_same_layout(grads)?;
    ensure!(
        state.m.len() == params.len()
            && state.m.iter().zip(params.iter()).all(|(m, (_, t))| m.len() == t.len()),
        DimensionMismatch,
        "optimizer state does not match the parameters"
    );
    state.step += 1;
    let lr = config.learning_rate;
    let decay = 1.0 - lr * config.weight_decay;
    let c1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    for (k, ((_, p), (_, g))) in params.iter_mut().zip(grads.iter()).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for (j, (pv, gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            let g = gv.as_f64();
            m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * g;
            v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * g * g;
            let update = lr * (m[j] / c1) / ((v[j] / c2).sqrt() + ADAM_EPS);
            *pv = T::lit(pv.as_f64() * decay - update);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar_params(value: f64) -> ModelParams<f64> {
        let mut p = ModelParams::new();
        p.push("w", Tensor::new(vec![1], vec![value]).unwrap()).unwrap();
        p
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = TrainConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.learning_rate, cfg.weight_decay, cfg.p_under, cfg.p_over), (1e-3, 1e-4, 1.0, 4.0));
        assert!(TrainConfig { p_over: 0.5, ..cfg.clone() }.validate().is_err());
        assert!(TrainConfig { p_under: 0.0, p_over: 0.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = scalar_params(0.3);
        let g = scalar_params(0.0);
        let mut state = AdamState::new(&p);
        let cfg = TrainConfig { weight_decay: 0.0, ..Default::default() };
        adam_step(&mut p, &g, &mut state, &cfg).unwrap();
        assert_eq!(p.get("w").unwrap().data()[0], 0.3);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_params(0.0);
        let mut state = AdamState::new(&p);
        let cfg = TrainConfig { weight_decay: 0.0, ..Default::default() };
        adam_step(&mut p, &scalar_params(1.0), &mut state, &cfg).unwrap();
        let expected = -1e-3 / (1.0 + ADAM_EPS);
        assert!((p.get("w").unwrap().data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn decoupled_decay_scales_parameters() {
        let mut p = scalar_params(1.0);
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &scalar_params(0.0), &mut state, &TrainConfig::default()).unwrap();
        assert!((p.get("w").unwrap().data()[0] - (1.0 - 1e-7)).abs() < 1e-16);
    }
}
