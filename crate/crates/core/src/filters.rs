//! Reliable denoisers: filters with weak priors that blur but never invent
//! structure, plus the interpolation path used for super-resolution.

use crate::error::{ensure, Result};
use crate::imagecore::{reflect_index, resize_bicubic, Image};
use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FilterKind {
    #[default]
    Gaussian,
    Bilateral,
    Nlm,
    BicubicUpscale,
}

impl std::str::FromStr for FilterKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bilateral" => Ok(Self::Bilateral),
            "nlm" => Ok(Self::Nlm),
            "bicubic_upscale" | "bicubic-upscale" | "bicubic" => Ok(Self::BicubicUpscale),
            other => Err(crate::Error::InvalidParameter(format!("unknown filter {other:?}"))),
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Bilateral => "bilateral",
            Self::Nlm => "nlm",
            Self::BicubicUpscale => "bicubic_upscale",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliableFilterSpec {
    pub kind: FilterKind,
    pub gaussian_sigma: f64,
    pub bilateral_sigma_space: f64,
    pub bilateral_sigma_range: f64,
    pub nlm_patch: usize,
    pub nlm_window: usize,
    pub nlm_h: f64,
    /// Upscaling factor, super-resolution only.
    pub scale: usize,
}

impl Default for ReliableFilterSpec {
    fn default() -> Self {
        Self {
            kind: FilterKind::Gaussian,
            gaussian_sigma: 1.5,
            bilateral_sigma_space: 2.0,
            bilateral_sigma_range: 0.1,
            nlm_patch: 7,
            nlm_window: 21,
            nlm_h: 0.08,
            scale: 4,
        }
    }
}

impl ReliableFilterSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            gaussian_sigma: sigma,
            ..Self::default()
        }
    }

    pub fn with_kind(kind: FilterKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FilterKind::Gaussian => check_sigma("gaussian sigma", self.gaussian_sigma),
            FilterKind::Bilateral => {
                check_sigma("bilateral spatial sigma", self.bilateral_sigma_space)?;
                check_sigma("bilateral range sigma", self.bilateral_sigma_range)
            }
            FilterKind::Nlm => check_nlm(self.nlm_patch, self.nlm_window, self.nlm_h),
            FilterKind::BicubicUpscale => {
                ensure!(
                    (2..=4).contains(&self.scale),
                    InvalidParameter,
                    "upscale factor must be 2, 3 or 4, got {}",
                    self.scale
                );
                Ok(())
            }
        }
    }

    /// Stable textual identity, used for cache keys.
    pub fn fingerprint(&self) -> String {
        match self.kind {
            FilterKind::Gaussian => format!("gaussian:{:?}", self.gaussian_sigma),
            FilterKind::Bilateral => format!(
                "bilateral:{:?}:{:?}",
                self.bilateral_sigma_space, self.bilateral_sigma_range
            ),
            FilterKind::Nlm => format!("nlm:{}:{}:{:?}", self.nlm_patch, self.nlm_window, self.nlm_h),
            FilterKind::BicubicUpscale => format!("bicubic:{}", self.scale),
        }
    }
}

fn check_sigma(name: &str, sigma: f64) -> Result<()> {
    ensure!(
        sigma > 0.0 && sigma.is_finite(),
        InvalidParameter,
        "{name} must be positive, got {sigma}"
    );
    Ok(())
}

fn check_nlm(patch: usize, window: usize, h: f64) -> Result<()> {
    ensure!(patch % 2 == 1, InvalidParameter, "NLM patch size must be odd, got {patch}");
    ensure!(window % 2 == 1, InvalidParameter, "NLM window size must be odd, got {window}");
    check_sigma("NLM h", h)
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_filter<T: Scalar>(img: &Image<T>, sigma: f64) -> Result<Image<T>> {
    check_sigma("gaussian sigma", sigma)?;
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (h, w) = img.dims();
    let horizontal = Image::from_fn(h, w, |y, x| {
        let row = img.row(y);
        let acc: f64 = kernel
            .iter()
            .enumerate()
            .map(|(k, &g)| g * row[reflect_index(x as isize + k as isize - radius, w)].as_f64())
            .sum();
        T::lit(acc)
    });
    Ok(Image::from_fn(h, w, |y, x| {
        let acc: f64 = kernel
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                g * horizontal[(reflect_index(y as isize + k as isize - radius, h), x)].as_f64()
            })
            .sum();
        T::lit(acc)
    }))
}

/// Bilateral filter over a `(2 ceil(3 sigma_space) + 1)^2` window with
/// reflected borders; weights renormalized per pixel.
pub fn bilateral_filter<T: Scalar>(img: &Image<T>, sigma_space: f64, sigma_range: f64) -> Result<Image<T>> {
    check_sigma("bilateral spatial sigma", sigma_space)?;
    check_sigma("bilateral range sigma", sigma_range)?;
    let radius = (3.0 * sigma_space).ceil() as isize;
    let side = (2 * radius + 1) as usize;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            spatial.push((-((dy * dy + dx * dx) as f64) / (2.0 * sigma_space * sigma_space)).exp());
        }
    }
    let range_denom = 2.0 * sigma_range * sigma_range;
    let (h, w) = img.dims();
    Ok(Image::from_fn(h, w, |y, x| {
        let center = img[(y, x)].as_f64();
        let (mut num, mut den) = (0.0, 0.0);
        let mut k = 0;
        for dy in -radius..=radius {
            let sy = reflect_index(y as isize + dy, h);
            for dx in -radius..=radius {
                let v = img[(sy, reflect_index(x as isize + dx, w))].as_f64();
                let weight = spatial[k] * (-(v - center).powi(2) / range_denom).exp();
                num += weight * v;
                den += weight;
                k += 1;
            }
        }
        T::lit(num / den)
    }))
}

/// Non-local means. Each pixel becomes a weighted mean of the candidates in a
/// `window x window` neighborhood, weighted by `exp(-d2 / h^2)` where `d2` is
/// the mean squared difference between the `patch x patch` neighborhoods.
/// Borders are reflected.
pub fn nlm_filter<T: Scalar>(img: &Image<T>, patch: usize, window: usize, h: f64) -> Result<Image<T>> {
    check_nlm(patch, window, h)?;
    let (height, width) = img.dims();
    let pr = (patch / 2) as isize;
    let wr = (window / 2) as isize;
    let pad = (pr + wr) as usize;
    // Reflected canvas large enough for every candidate patch.
    let (ph, pw) = (height + 2 * pad, width + 2 * pad);
    let canvas: Vec<f64> = (0..ph)
        .flat_map(|y| {
            let sy = reflect_index(y as isize - pad as isize, height);
            (0..pw).map(move |x| img[(sy, reflect_index(x as isize - pad as isize, width))].as_f64())
        })
        .collect();
    let at = |y: usize, x: usize| canvas[y * pw + x];

    let inv_h2 = 1.0 / (h * h);
    let patch_area = (patch * patch) as f64;
    let mut num = vec![0.0; height * width];
    let mut den = vec![0.0; height * width];
    // Summed-area table of squared differences for one displacement, covering
    // the region where reference patches live.
    let (rh, rw) = (height + 2 * pr as usize, width + 2 * pr as usize);
    let mut table = vec![0.0; (rh + 1) * (rw + 1)];
    let base = wr as usize; // canvas offset of the reference region

    for dy in -wr..=wr {
        for dx in -wr..=wr {
            for y in 0..rh {
                let mut row_acc = 0.0;
                for x in 0..rw {
                    let a = at(base + y, base + x);
                    let b = at(
                        (base as isize + y as isize + dy) as usize,
                        (base as isize + x as isize + dx) as usize,
                    );
                    row_acc += (a - b) * (a - b);
                    table[(y + 1) * (rw + 1) + x + 1] = table[y * (rw + 1) + x + 1] + row_acc;
                }
            }
            let side = patch;
            for y in 0..height {
                for x in 0..width {
                    let (y1, x1) = (y + side, x + side);
                    let sum = table[y1 * (rw + 1) + x1] - table[y * (rw + 1) + x1]
                        - table[y1 * (rw + 1) + x]
                        + table[y * (rw + 1) + x];
                    let d2 = (sum / patch_area).max(0.0);
                    let weight = (-d2 * inv_h2).exp();
                    let candidate = at(
                        (pad as isize + y as isize + dy) as usize,
                        (pad as isize + x as isize + dx) as usize,
                    );
                    num[y * width + x] += weight * candidate;
                    den[y * width + x] += weight;
                }
            }
        }
    }
    Image::new(
        height,
        width,
        num.iter().zip(&den).map(|(n, d)| T::lit(n / d)).collect(),
    )
}

/// Runs the filter selected by `spec`.
pub fn reliable_denoise<T: Scalar>(img: &Image<T>, spec: &ReliableFilterSpec) -> Result<Image<T>> {
    spec.validate()?;
    match spec.kind {
        FilterKind::Gaussian => gaussian_filter(img, spec.gaussian_sigma),
        FilterKind::Bilateral => {
            bilateral_filter(img, spec.bilateral_sigma_space, spec.bilateral_sigma_range)
        }
        FilterKind::Nlm => nlm_filter(img, spec.nlm_patch, spec.nlm_window, spec.nlm_h),
        FilterKind::BicubicUpscale => {
            resize_bicubic(img, img.height() * spec.scale, img.width() * spec.scale)
        }
    }
}
