use rand_distr::{Distribution, Normal};

use super::ops::{avgpool2, avgpool2_backward, conv2d, conv2d_backward, relu, relu_backward, sigmoid, sigmoid_backward};
use super::{ModelParams, Tensor};
use crate::error::{ensure, Result};
use crate::{rng, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    /// Convolution whose kernel and bias live at these parameter indices.
    Conv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        weight: usize,
        bias: usize,
    },
    Relu,
    AvgPool2,
    Sigmoid,
}

/// A feed-forward stack of layers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Network {
    layers: Vec<Layer>,
    convs: usize,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a `kernel x kernel` convolution named `conv{n}`.
    pub fn conv(mut self, in_ch: usize, out_ch: usize, kernel: usize) -> Self {
        assert!(kernel == 1 || kernel == 3, "only 1x1 and 3x3 kernels are supported");
        let weight = 2 * self.convs;
        self.layers.push(Layer::Conv {
            in_ch,
            out_ch,
            kernel,
            weight,
            bias: weight + 1,
        });
        self.convs += 1;
        self
    }

    pub fn relu(mut self) -> Self {
        self.layers.push(Layer::Relu);
        self
    }

    pub fn avgpool2(mut self) -> Self {
        self.layers.push(Layer::AvgPool2);
        self
    }

    pub fn sigmoid(mut self) -> Self {
        self.layers.push(Layer::Sigmoid);
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    fn conv_layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.layers.iter().filter_map(|l| match *l {
            Layer::Conv { in_ch, out_ch, kernel, .. } => Some((in_ch, out_ch, kernel)),
            _ => None,
        })
    }

    /// All-zero parameters in declaration order.
    pub fn zeros<T: Scalar>(&self) -> ModelParams<T> {
        let mut params = ModelParams::new();
        for (n, (in_ch, out_ch, k)) in self.conv_layers().enumerate() {
            params
                .push(format!("conv{}.weight", n + 1), Tensor::zeros(&[out_ch, in_ch, k, k]))
                .expect("unique names");
            params
                .push(format!("conv{}.bias", n + 1), Tensor::zeros(&[out_ch]))
                .expect("unique names");
        }
        params
    }

    /// He-normal kernels and zero biases, drawn from a seeded stream.
    pub fn init<T: Scalar>(&self, seed: u64) -> ModelParams<T> {
        let mut params = self.zeros::<T>();
        let mut r = rng::stream(seed, &[0x1417]);
        for (n, (in_ch, _, k)) in self.conv_layers().enumerate() {
            let std = (2.0 / (in_ch * k * k) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            for v in params.tensor_mut(2 * n).data_mut() {
                *v = T::lit(normal.sample(&mut r));
            }
        }
        params
    }

    pub fn check_params<T: Scalar>(&self, params: &ModelParams<T>) -> Result<()> {
        self.zeros::<T>().check_same_layout(params)
    }

    pub fn forward<T: Scalar>(&self, params: &ModelParams<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_params(params)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = apply(layer, params, &x)?;
        }
        Ok(x)
    }

    /// Forward pass keeping every activation: element 0 is the input and
    /// element `i + 1` the output of layer `i`.
    pub fn forward_trace<T: Scalar>(&self, params: &ModelParams<T>, input: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_params(params)?;
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(input.clone());
        for layer in &self.layers {
            let next = apply(layer, params, trace.last().expect("non-empty"))?;
            trace.push(next);
        }
        Ok(trace)
    }

    /// Backpropagates `grad_out` through a recorded trace. Returns parameter
    /// gradients (in parameter order) and the gradient for the input.
    pub fn backward<T: Scalar>(
        &self,
        params: &ModelParams<T>,
        trace: &[Tensor<T>],
        grad_out: &Tensor<T>,
    ) -> Result<(ModelParams<T>, Tensor<T>)> {
        ensure!(
            trace.len() == self.layers.len() + 1,
            DimensionMismatch,
            "trace has {} activations for {} layers",
            trace.len(),
            self.layers.len()
        );
        trace.last().expect("non-empty").check_same_shape(grad_out)?;
        let mut grads = params.zeros_like();
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            g = match *layer {
                Layer::Conv { weight, bias, .. } => {
                    let cg = conv2d_backward(&g, &trace[i], params.tensor(weight))?;
                    *grads.tensor_mut(weight) = cg.kernel;
                    *grads.tensor_mut(bias) = cg.bias;
                    cg.input
                }
                Layer::Relu => relu_backward(&g, &trace[i])?,
                Layer::AvgPool2 => avgpool2_backward(&g)?,
                Layer::Sigmoid => sigmoid_backward(&g, &trace[i + 1])?,
            };
        }
        Ok((grads, g))
    }
}

fn apply<T: Scalar>(layer: &Layer, params: &ModelParams<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    match *layer {
        Layer::Conv { weight, bias, .. } => conv2d(x, params.tensor(weight), params.tensor(bias)),
        Layer::Relu => Ok(relu(x)),
        Layer::AvgPool2 => avgpool2(x),
        Layer::Sigmoid => Ok(sigmoid(x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_layout_follows_declaration() {
        let net = Network::new().conv(3, 4, 3).relu().avgpool2().conv(4, 1, 1).sigmoid();
        let p = net.init::<f32>(7);
        assert_eq!(
            p.names().collect::<Vec<_>>(),
            ["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias"]
        );
        assert_eq!(p.get("conv1.weight").unwrap().shape(), &[4, 3, 3, 3]);
        assert_eq!(p.get("conv2.weight").unwrap().shape(), &[1, 4, 1, 1]);
        assert_eq!(net.init::<f32>(7), p);
        assert_ne!(net.init::<f32>(8), p);
        assert!(p.get("conv1.bias").unwrap().data().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn trace_ends_at_forward_output() {
        let net = Network::new().conv(1, 2, 3).relu().avgpool2().conv(2, 1, 1).sigmoid();
        let p = net.init::<f64>(1);
        let x = Tensor::new(vec![1, 4, 4], (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
        let trace = net.forward_trace(&p, &x).unwrap();
        assert_eq!(trace.len(), 6);
        assert_eq!(trace.last().unwrap(), &net.forward(&p, &x).unwrap());
        assert_eq!(trace[5].shape(), &[1, 2, 2]);
        assert!(net.forward(&Network::new().conv(1, 3, 3).zeros::<f64>(), &x).is_err());
    }
}
