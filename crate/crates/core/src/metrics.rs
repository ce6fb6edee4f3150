//! Full-reference quality metrics and fusion-weight sweeps.

use std::fmt::Write as _;

use crate::error::{ensure, Result};
use crate::fusion::{fuse, ConfidenceMap, FusionParams};
use crate::imagecore::Image;
use crate::Scalar;

/// PSNR written to CSV/JSON in place of +inf for identical images.
pub const PSNR_INFINITE: f64 = 999.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

pub fn mse<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB for a peak of 1.0. Identical images give
/// `f64::INFINITY`; see [`reportable_psnr`].
pub fn psnr<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { -10.0 * m.log10() })
}

/// Replaces a non-finite PSNR with [`PSNR_INFINITE`].
pub fn reportable_psnr(value: f64) -> f64 {
    if value.is_finite() {
        value
    } else {
        PSNR_INFINITE
    }
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable "valid" correlation with the SSIM window.
fn filter_valid(data: &[f64], h: usize, w: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut horiz = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            horiz[y * ow + x] = (0..k).map(|i| taps[i] * data[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| taps[i] * horiz[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean structural similarity over all fully contained 11x11 Gaussian
/// windows (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    a.check_same_dims(b)?;
    let (h, w) = a.dims();
    ensure!(
        h >= SSIM_WINDOW && w >= SSIM_WINDOW,
        InvalidParameter,
        "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
    );
    let taps = ssim_window();
    let xa: Vec<f64> = a.pixels().iter().map(|p| p.as_f64()).collect();
    let xb: Vec<f64> = b.pixels().iter().map(|p| p.as_f64()).collect();
    let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let (mu_a, ..) = filter_valid(&xa, h, w, &taps);
    let (mu_b, ..) = filter_valid(&xb, h, w, &taps);
    let (e_aa, ..) = filter_valid(&sq(&xa, &xa), h, w, &taps);
    let (e_bb, ..) = filter_valid(&sq(&xb, &xb), h, w, &taps);
    let (e_ab, ..) = filter_valid(&sq(&xa, &xb), h, w, &taps);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| ssim_term(mu_a[i], mu_b[i], e_aa[i], e_bb[i], e_ab[i], c1, c2))
        .sum();
    Ok(total / n as f64)
}

#[inline]
fn ssim_term(mu_a: f64, mu_b: f64, e_aa: f64, e_bb: f64, e_ab: f64, c1: f64, c2: f64) -> f64 {
    let var_a = e_aa - mu_a * mu_a;
    let var_b = e_bb - mu_b * mu_b;
    let cov = e_ab - mu_a * mu_b;
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality {
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

pub fn quality<T: Scalar>(img: &Image<T>, reference: &Image<T>) -> Result<Quality> {
    Ok(Quality {
        psnr: psnr(img, reference)?,
        ssim: ssim(img, reference)?,
        mse: mse(img, reference)?,
    })
}

/// Metrics of fused outputs across a grid of weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub weights: Vec<f64>,
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
    pub mse: Vec<f64>,
    pub best_psnr_w: f64,
    pub best_ssim_w: f64,
    pub best_mse_w: f64,
    /// Best value on the grid minus the value at `w = 1`, per metric.
    pub delta_psnr: f64,
    pub delta_ssim: f64,
    pub delta_mse: f64,
}

/// Index of the first extremum; `better(a, b)` is true when `a` beats `b`.
fn arg_best(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// Fuses at every grid weight and scores the result against `gt`.
pub fn sweep<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    gt: &Image<T>,
    confidence: Option<&ConfidenceMap<T>>,
    params: &FusionParams,
    grid: &[f64],
) -> Result<SweepResult> {
    ensure!(!grid.is_empty(), InvalidParameter, "sweep grid is empty");
    ensure!(
        grid.iter().all(|w| (0.0..=1.0).contains(w)),
        InvalidParameter,
        "sweep weights must lie in [0, 1]"
    );
    reliable.check_same_dims(gt)?;
    let mut scores = Vec::with_capacity(grid.len());
    for &w in grid {
        let fused = fuse(reliable, hallucinatory, confidence, &params.with_weight(w))?;
        scores.push(quality(&fused, gt)?);
    }
    let at_one = match grid.iter().position(|&w| w == 1.0) {
        Some(i) => scores[i],
        None => quality(
            &fuse(reliable, hallucinatory, confidence, &params.with_weight(1.0))?,
            gt,
        )?,
    };
    let psnr: Vec<f64> = scores.iter().map(|q| q.psnr).collect();
    let ssim: Vec<f64> = scores.iter().map(|q| q.ssim).collect();
    let mse: Vec<f64> = scores.iter().map(|q| q.mse).collect();
    let ip = arg_best(&psnr, |a, b| a > b);
    let is = arg_best(&ssim, |a, b| a > b);
    let im = arg_best(&mse, |a, b| a < b);
    Ok(SweepResult {
        weights: grid.to_vec(),
        best_psnr_w: grid[ip],
        best_ssim_w: grid[is],
        best_mse_w: grid[im],
        delta_psnr: reportable_psnr(psnr[ip]) - reportable_psnr(at_one.psnr),
        delta_ssim: ssim[is] - at_one.ssim,
        delta_mse: mse[im] - at_one.mse,
        psnr,
        ssim,
        mse,
    })
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let exponent = value.abs().log10().floor() as i32;
    if exponent < -5 || exponent >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, value);
        let (mantissa, exp) = s.split_once('e').expect("scientific notation");
        let mantissa = trim_zeros(mantissa);
        let exp: i32 = exp.parse().expect("integer exponent");
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl SweepResult {
    /// CSV with header `w,psnr,ssim,mse`, six significant digits, and
    /// trailing `#` comment rows for the extrema and deltas.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,psnr,ssim,mse\n");
        for i in 0..self.weights.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                format_significant(self.weights[i], 6),
                format_significant(reportable_psnr(self.psnr[i]), 6),
                format_significant(self.ssim[i], 6),
                format_significant(self.mse[i], 6)
            );
        }
        for (name, value) in [
            ("best_psnr_w", self.best_psnr_w),
            ("best_ssim_w", self.best_ssim_w),
            ("best_mse_w", self.best_mse_w),
            ("delta_psnr", self.delta_psnr),
            ("delta_ssim", self.delta_ssim),
            ("delta_mse", self.delta_mse),
        ] {
            let _ = writeln!(out, "# {name}={}", format_significant(value, 6));
        }
        out
    }
}

/// `n + 1` evenly spaced weights from 0 to 1.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n > 0);
    (0..=n).map(|i| i as f64 / n as f64).collect()
}
