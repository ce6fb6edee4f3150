use crate::error::{ensure, Result};
use crate::imagecore::Image;
use crate::Scalar;

/// Dense row-major tensor. Activations are `(channels, height, width)`,
/// convolution kernels `(out, in, kh, kw)` and biases `(out,)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        ensure!(
            !shape.is_empty() && expected == data.len(),
            DimensionMismatch,
            "tensor shape {shape:?} needs {expected} values, got {}",
            data.len()
        );
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        assert!(!shape.is_empty(), "tensor needs at least one axis");
        Self {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    /// Stacks same-sized images as channels.
    pub fn from_images(channels: &[&Image<T>]) -> Result<Self> {
        ensure!(!channels.is_empty(), InvalidParameter, "no channels to stack");
        let (h, w) = channels[0].dims();
        let mut data = Vec::with_capacity(channels.len() * h * w);
        for img in channels {
            channels[0].check_same_dims(img)?;
            data.extend_from_slice(img.pixels());
        }
        Self::new(vec![channels.len(), h, w], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// `(channels, height, width)` of a rank-3 tensor.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(crate::Error::DimensionMismatch(format!(
                "expected a (C, H, W) tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// One channel of a rank-3 tensor as an image.
    pub fn channel(&self, c: usize) -> Result<Image<T>> {
        let (channels, h, w) = self.dims3()?;
        ensure!(c < channels, InvalidParameter, "channel {c} out of {channels}");
        Image::new(h, w, self.data[c * h * w..(c + 1) * h * w].to_vec())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        ensure!(
            self.shape == other.shape,
            DimensionMismatch,
            "tensor shapes differ: {:?} vs {:?}",
            self.shape,
            other.shape
        );
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v.cast()).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum()
    }
}
