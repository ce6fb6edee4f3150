use super::{endpoints, region_weight, ConfidenceMap, FusionParams, PATCH};
use crate::error::Result;
use crate::imagecore::{crop, resize_bicubic, Image};
use crate::transforms::{dct2, idct2, DctSpectrum};
use crate::Scalar;

/// Number of equispaced weight levels evaluated by guided DCT fusion.
pub const GUIDED_DCT_LEVELS: usize = 17;

/// Half-Gaussian frequency mask `exp(-(nu_x^2 + nu_y^2) / (2 s))` with
/// `s = a (1 / (1 - w + eps) - 1)` and normalized frequencies
/// `nu = index / dimension`. For `s <= 0` (tiny weights) the `s -> 0+`
/// limit is used: only the DC term passes.
pub fn dct_mask<T: Scalar>(height: usize, width: usize, weight: f64, a: f64, eps: f64) -> DctSpectrum<T> {
    let s = a * (1.0 / (1.0 - weight + eps) - 1.0);
    let mut coeffs = Vec::with_capacity(height * width);
    for u in 0..height {
        let nu_y = u as f64 / height as f64;
        for v in 0..width {
            let nu_x = v as f64 / width as f64;
            let m = if s > 0.0 {
                (-(nu_x * nu_x + nu_y * nu_y) / (2.0 * s)).exp()
            } else if u == 0 && v == 0 {
                1.0
            } else {
                0.0
            };
            coeffs.push(T::lit(m));
        }
    }
    DctSpectrum {
        height,
        width,
        coeffs,
    }
}

/// Both spectra of a fusion pair, reused across weights.
struct SpectralPair<T: Scalar> {
    reliable: DctSpectrum<T>,
    /// `dct2(hallucinatory) - dct2(reliable)`
    delta: Vec<T>,
}

impl<T: Scalar> SpectralPair<T> {
    fn new(reliable: &Image<T>, hallucinatory: &Image<T>) -> Self {
        let r = dct2(reliable);
        let h = dct2(hallucinatory);
        let delta = h.coeffs.iter().zip(&r.coeffs).map(|(&h, &r)| h - r).collect();
        Self { reliable: r, delta }
    }

    fn fuse(&self, weight: f64, a: f64, eps: f64) -> Image<T> {
        let (h, w) = (self.reliable.height, self.reliable.width);
        let mask = dct_mask::<T>(h, w, weight, a, eps);
        let coeffs = self
            .reliable
            .coeffs
            .iter()
            .zip(&self.delta)
            .zip(&mask.coeffs)
            .map(|((&r, &d), &m)| r + m * d)
            .collect();
        idct2(&DctSpectrum {
            height: h,
            width: w,
            coeffs,
        })
    }
}

/// Spectral interpolation `R + M o (H - R)`; low frequencies of the
/// hallucinatory input enter first as `w` grows.
pub fn fuse_dct<T: Scalar>(reliable: &Image<T>, hallucinatory: &Image<T>, params: &FusionParams) -> Result<Image<T>> {
    if let Some(out) = endpoints(reliable, hallucinatory, params)? {
        return Ok(out);
    }
    Ok(SpectralPair::new(reliable, hallucinatory).fuse(params.weight, params.mask_scale, params.mask_eps))
}

/// Bicubic upsampling of the block grid onto the pixel grid, each cell
/// centered on its 8x8 block, clamped to `[0, 1]`.
pub fn upsample_confidence<T: Scalar>(conf: &ConfidenceMap<T>, height: usize, width: usize) -> Result<Image<T>> {
    conf.check_covers(height, width)?;
    let full = resize_bicubic(conf.as_image(), conf.rows() * PATCH, conf.cols() * PATCH)?;
    Ok(crop(&full, height, width).clamp_unit())
}

/// Pixel-wise confidence-aware DCT fusion.
///
/// Per-pixel weights come from the upsampled confidence through the region
/// weight update. Instead of one transform pair per distinct weight, fusion
/// is evaluated on [`GUIDED_DCT_LEVELS`] equispaced weights (only those some
/// pixel needs) and each pixel interpolates linearly between the two levels
/// bracketing its weight.
pub fn fuse_dct_guided<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    conf: &ConfidenceMap<T>,
    params: &FusionParams,
) -> Result<Image<T>> {
    params.validate()?;
    reliable.check_same_dims(hallucinatory)?;
    let (height, width) = reliable.dims();
    let dense = upsample_confidence(conf, height, width)?;
    if params.weight <= 0.0 {
        return Ok(reliable.clone());
    }

    let steps = (GUIDED_DCT_LEVELS - 1) as f64;
    let slots: Vec<(usize, f64)> = dense
        .pixels()
        .iter()
        .map(|c| {
            let q = region_weight(params.weight, c.as_f64(), params.threshold) * steps;
            let k = (q.floor() as usize).min(GUIDED_DCT_LEVELS - 2);
            (k, q - k as f64)
        })
        .collect();

    let mut needed = [false; GUIDED_DCT_LEVELS];
    for &(k, frac) in &slots {
        if frac < 1.0 {
            needed[k] = true;
        }
        if frac > 0.0 {
            needed[k + 1] = true;
        }
    }
    let pair = SpectralPair::new(reliable, hallucinatory);
    let outputs: Vec<Option<Image<T>>> = needed
        .iter()
        .enumerate()
        .map(|(k, &need)| {
            need.then(|| match k {
                0 => reliable.clone(),
                k if k == GUIDED_DCT_LEVELS - 1 => hallucinatory.clone(),
                k => pair.fuse(k as f64 / steps, params.mask_scale, params.mask_eps),
            })
        })
        .collect();

    let pixels = slots
        .iter()
        .enumerate()
        .map(|(i, &(k, frac))| {
            let lower = || outputs[k].as_ref().expect("level computed").pixels()[i];
            let upper = || outputs[k + 1].as_ref().expect("level computed").pixels()[i];
            if frac <= 0.0 {
                lower()
            } else if frac >= 1.0 {
                upper()
            } else {
                let f = T::lit(frac);
                (T::one() - f) * lower() + f * upper()
            }
        })
        .collect();
    Image::new(height, width, pixels)
}
