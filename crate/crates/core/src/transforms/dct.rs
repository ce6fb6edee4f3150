use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure, Result};
use crate::imagecore::Image;
use crate::Scalar;

/// Full-image type-II DCT coefficients `F(u, v)`, row-major with `u` the row
/// frequency. Orthonormal scaling, so energy equals pixel energy.
#[derive(Clone, Debug, PartialEq)]
pub struct DctSpectrum<T = f64> {
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> DctSpectrum<T> {
    pub fn new(height: usize, width: usize, coeffs: Vec<T>) -> Result<Self> {
        ensure!(
            height > 0 && width > 0 && coeffs.len() == height * width,
            DimensionMismatch,
            "{} coefficients for a {height}x{width} spectrum",
            coeffs.len()
        );
        Ok(Self {
            height,
            width,
            coeffs,
        })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> T {
        self.coeffs[u * self.width + v]
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.as_f64().powi(2)).sum()
    }
}

/// One-dimensional orthonormal DCT-II / DCT-III of a fixed length, computed
/// through a single complex FFT of the even/odd reordered signal.
struct Dct1d<T: Scalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// `exp(-i*pi*k/(2n))`
    twiddles: Vec<Complex<T>>,
    /// Orthonormal scale per frequency.
    scale: Vec<T>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> Dct1d<T> {
    fn new(n: usize, planner: &mut FftPlanner<T>) -> Self {
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let nf = n as f64;
        let twiddles = (0..n)
            .map(|k| {
                let theta = -std::f64::consts::PI * k as f64 / (2.0 * nf);
                Complex::new(T::lit(theta.cos()), T::lit(theta.sin()))
            })
            .collect();
        let scale = (0..n)
            .map(|k| T::lit(if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() }))
            .collect();
        Self {
            n,
            forward,
            inverse,
            twiddles,
            scale,
            buf: vec![Complex::default(); n],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    fn forward(&mut self, data: &mut [T]) {
        let n = self.n;
        for k in 0..n.div_ceil(2) {
            self.buf[k] = Complex::new(data[2 * k], T::zero());
        }
        for k in 0..n / 2 {
            self.buf[n - 1 - k] = Complex::new(data[2 * k + 1], T::zero());
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for k in 0..n {
            data[k] = (self.buf[k] * self.twiddles[k]).re * self.scale[k];
        }
    }

    fn inverse(&mut self, data: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            let re = data[k] / self.scale[k];
            let im = if k == 0 {
                T::zero()
            } else {
                -(data[n - k] / self.scale[n - k])
            };
            self.buf[k] = Complex::new(re, im) * self.twiddles[k].conj();
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = T::lit(1.0 / n as f64);
        for k in 0..n.div_ceil(2) {
            data[2 * k] = self.buf[k].re * norm;
        }
        for k in 0..n / 2 {
            data[2 * k + 1] = self.buf[n - 1 - k].re * norm;
        }
    }
}

fn separable<T: Scalar>(data: &mut [T], height: usize, width: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let mut rows = Dct1d::new(width, &mut planner);
    for row in data.chunks_exact_mut(width) {
        if inverse {
            rows.inverse(row)
        } else {
            rows.forward(row)
        }
    }
    let mut cols = Dct1d::new(height, &mut planner);
    let mut column = vec![T::zero(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        if inverse {
            cols.inverse(&mut column)
        } else {
            cols.forward(&mut column)
        }
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

pub fn dct2<T: Scalar>(img: &Image<T>) -> DctSpectrum<T> {
    let (height, width) = img.dims();
    let mut coeffs = img.pixels().to_vec();
    separable(&mut coeffs, height, width, false);
    DctSpectrum {
        height,
        width,
        coeffs,
    }
}

pub fn idct2<T: Scalar>(spec: &DctSpectrum<T>) -> Image<T> {
    let mut pixels = spec.coeffs.clone();
    separable(&mut pixels, spec.height, spec.width, true);
    Image::new(spec.height, spec.width, pixels).expect("spectrum dims are valid")
}
