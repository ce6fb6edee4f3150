//! A small deterministic tensor engine: just enough convolution, pooling,
//! activations, losses and Adam to train the two networks in `models`.
//!
//! Tensors hold a single sample. Batches are formed by accumulating
//! gradients over samples in the training loops.

mod network;
mod ops;
mod optim;
mod params;
mod tensor;

pub use network::{Layer, Network};
pub use ops::{
    asymmetric_sse, avgpool2, avgpool2_backward, conv2d, conv2d_backward, mse_loss, relu,
    relu_backward, sigmoid, sigmoid_backward, ConvGrads,
};
pub use optim::{adam_step, AdamState, TrainConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use params::{load_params, save_params, ModelParams, PARAMS_MAGIC, PARAMS_VERSION};
pub use tensor::Tensor;
