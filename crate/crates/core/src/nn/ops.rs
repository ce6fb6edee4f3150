//! Forward and backward passes of the individual layers, plus losses.

use super::Tensor;
use crate::error::{ensure, Result};
use crate::Scalar;

fn kernel_dims<T: Scalar>(kernel: &Tensor<T>) -> Result<(usize, usize, usize)> {
    match kernel.shape()[..] {
        [o, i, kh, kw] if kh == kw && (kh == 1 || kh == 3) => Ok((o, i, kh)),
        _ => Err(crate::Error::DimensionMismatch(format!(
            "kernel must be (out, in, 3, 3) or (out, in, 1, 1), got {:?}",
            kernel.shape()
        ))),
    }
}

/// Copies `(c, h, w)` data into a zero border of width `pad`.
fn pad_zero<T: Scalar>(data: &[T], c: usize, h: usize, w: usize, pad: usize) -> Vec<T> {
    if pad == 0 {
        return data.to_vec();
    }
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut out = vec![T::zero(); c * ph * pw];
    for ch in 0..c {
        for y in 0..h {
            let src = &data[(ch * h + y) * w..(ch * h + y + 1) * w];
            let start = (ch * ph + y + pad) * pw + pad;
            out[start..start + w].copy_from_slice(src);
        }
    }
    out
}

#[inline]
fn axpy<T: Scalar>(dst: &mut [T], a: T, src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

/// Dot product with eight independent partial sums, which lets the
/// compiler vectorise the reduction.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut lanes = [T::zero(); 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for i in 0..8 {
            lanes[i] += x[i] * y[i];
        }
    }
    let tail = ar.iter().zip(br).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    lanes.iter().fold(tail, |acc, &v| acc + v)
}

/// Same-size 2-D cross-correlation with zero padding.
pub fn conv2d<T: Scalar>(input: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = input.dims3()?;
    let (oc, ic, k) = kernel_dims(kernel)?;
    ensure!(ic == c, DimensionMismatch, "kernel expects {ic} input channels, got {c}");
    ensure!(bias.shape() == [oc], DimensionMismatch, "bias shape {:?} for {oc} outputs", bias.shape());
    let pad = k / 2;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let padded = pad_zero(input.data(), c, h, w, pad);
    let weights = kernel.data();
    let mut out = vec![T::zero(); oc * h * w];
    for (o, plane) in out.chunks_exact_mut(h * w).enumerate() {
        plane.fill(bias.data()[o]);
        for i in 0..c {
            let src = &padded[i * ph * pw..(i + 1) * ph * pw];
            let taps = &weights[(o * ic + i) * k * k..(o * ic + i + 1) * k * k];
            for y in 0..h {
                let dst = &mut plane[y * w..(y + 1) * w];
                for ky in 0..k {
                    let row = &src[(y + ky) * pw..(y + ky + 1) * pw];
                    for kx in 0..k {
                        axpy(dst, taps[ky * k + kx], &row[kx..kx + w]);
                    }
                }
            }
        }
    }
    Tensor::new(vec![oc, h, w], out)
}

/// Gradients of [`conv2d`] with respect to its three arguments.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    kernel: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (c, h, w) = input.dims3()?;
    let (oc, ic, k) = kernel_dims(kernel)?;
    ensure!(ic == c, DimensionMismatch, "kernel expects {ic} input channels, got {c}");
    ensure!(
        grad_out.shape() == [oc, h, w],
        DimensionMismatch,
        "output gradient shape {:?}, expected {:?}",
        grad_out.shape(),
        [oc, h, w]
    );
    let pad = k / 2;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let padded = pad_zero(input.data(), c, h, w, pad);
    let weights = kernel.data();
    let mut grad_padded = vec![T::zero(); c * ph * pw];
    let mut grad_kernel = vec![T::zero(); weights.len()];
    let mut grad_bias = vec![T::zero(); oc];

    for (o, g) in grad_out.data().chunks_exact(h * w).enumerate() {
        grad_bias[o] = T::lit(g.iter().map(|v| v.as_f64()).sum());
        for i in 0..c {
            let src = &padded[i * ph * pw..(i + 1) * ph * pw];
            let base = (o * ic + i) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let tap = weights[base + ky * k + kx];
                    let mut acc = 0.0f64;
                    for y in 0..h {
                        let g_row = &g[y * w..(y + 1) * w];
                        let offset = (i * ph + y + ky) * pw + kx;
                        acc += dot(g_row, &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w]).as_f64();
                        axpy(&mut grad_padded[offset..offset + w], tap, g_row);
                    }
                    grad_kernel[base + ky * k + kx] = T::lit(acc);
                }
            }
        }
    }

    let mut grad_input = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            let start = (ch * ph + y + pad) * pw + pad;
            grad_input.extend_from_slice(&grad_padded[start..start + w]);
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(vec![c, h, w], grad_input)?,
        kernel: Tensor::new(kernel.shape().to_vec(), grad_kernel)?,
        bias: Tensor::new(vec![oc], grad_bias)?,
    })
}

pub fn relu<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `grad` where the forward input was strictly positive.
pub fn relu_backward<T: Scalar>(grad: &Tensor<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    grad.check_same_shape(input)?;
    let data = grad
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(grad.shape().to_vec(), data)
}

/// 2x2 mean pooling with stride 2.
pub fn avgpool2<T: Scalar>(t: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = t.dims3()?;
    ensure!(h % 2 == 0 && w % 2 == 0, DimensionMismatch, "avgpool2 needs even dims, got {h}x{w}");
    let (oh, ow) = (h / 2, w / 2);
    let quarter = T::lit(0.25);
    let src = t.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            let top = &src[(ch * h + 2 * y) * w..(ch * h + 2 * y + 1) * w];
            let bottom = &src[(ch * h + 2 * y + 1) * w..(ch * h + 2 * y + 2) * w];
            for x in 0..ow {
                out.push((top[2 * x] + top[2 * x + 1] + bottom[2 * x] + bottom[2 * x + 1]) * quarter);
            }
        }
    }
    Tensor::new(vec![c, oh, ow], out)
}

/// Spreads each output gradient evenly over its 2x2 source block.
pub fn avgpool2_backward<T: Scalar>(grad: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, oh, ow) = grad.dims3()?;
    let (h, w) = (2 * oh, 2 * ow);
    let quarter = T::lit(0.25);
    let g = grad.data();
    let mut out = vec![T::zero(); c * h * w];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                out[(ch * h + y) * w + x] = g[(ch * oh + y / 2) * ow + x / 2] * quarter;
            }
        }
    }
    Tensor::new(vec![c, h, w], out)
}

pub fn sigmoid<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(|x| {
        if x >= T::zero() {
            T::one() / (T::one() + (-x).exp())
        } else {
            let e = x.exp();
            e / (T::one() + e)
        }
    })
}

/// Backward pass given the forward *output* `s`.
pub fn sigmoid_backward<T: Scalar>(grad: &Tensor<T>, output: &Tensor<T>) -> Result<Tensor<T>> {
    grad.check_same_shape(output)?;
    let data = grad
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &s)| g * s * (T::one() - s))
        .collect();
    Tensor::new(grad.shape().to_vec(), data)
}

/// Squared error weighted by `p_under` where the output falls short of the
/// target and by `p_over` where it meets or exceeds it. Returns the summed
/// loss and its gradient.
pub fn asymmetric_sse<T: Scalar>(
    output: &Tensor<T>,
    target: &Tensor<T>,
    p_under: f64,
    p_over: f64,
) -> Result<(f64, Tensor<T>)> {
    output.check_same_shape(target)?;
    let mut loss = 0.0;
    let grad = output
        .data()
        .iter()
        .zip(target.data())
        .map(|(&o, &t)| {
            let diff = o.as_f64() - t.as_f64();
            let p = if o < t { p_under } else { p_over };
            loss += diff * diff * p;
            T::lit(2.0 * diff * p)
        })
        .collect();
    Ok((loss, Tensor::new(output.shape().to_vec(), grad)?))
}

/// Mean squared error and its gradient.
pub fn mse_loss<T: Scalar>(output: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    output.check_same_shape(target)?;
    let n = output.len() as f64;
    let mut loss = 0.0;
    let grad = output
        .data()
        .iter()
        .zip(target.data())
        .map(|(&o, &t)| {
            let diff = o.as_f64() - t.as_f64();
            loss += diff * diff;
            T::lit(2.0 * diff / n)
        })
        .collect();
    Ok((loss / n, Tensor::new(output.shape().to_vec(), grad)?))
}
