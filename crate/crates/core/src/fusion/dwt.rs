use super::{endpoints, region_weight, ConfidenceMap, FusionMethod, FusionParams};
use crate::error::Result;
use crate::imagecore::{crop, pad_reflect_to_multiple, Image};
use crate::transforms::{dwt2, idwt2, Wavelet};
use crate::Scalar;

/// Side of the regions used by confidence-aware fusion.
pub const PATCH: usize = 8;
/// Decomposition depth inside one region.
pub const PATCH_LEVELS: usize = 2;

/// Blend factor of band group `band` (0 = approximation, `levels` = finest
/// details) at weight `w`: `clamp(w (L + 1) - band, 0, 1)`. Coarse bands
/// switch to the hallucinatory input first.
pub fn band_alpha(weight: f64, levels: usize, band: usize) -> f64 {
    (weight * (levels + 1) as f64 - band as f64).clamp(0.0, 1.0)
}

fn fuse_pyramids<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    weight: f64,
    levels: usize,
    wavelet: Wavelet,
    correlation: Option<f64>,
) -> Result<Image<T>> {
    let pr = dwt2(reliable, wavelet, levels)?;
    let ph = dwt2(hallucinatory, wavelet, levels)?;
    let alphas: Vec<T> = (0..=levels).map(|b| T::lit(band_alpha(weight, levels, b))).collect();
    let w = T::lit(weight);
    let fused = pr.zip_bands_with(&ph, |band, is_detail, r, h| {
        let mut alpha = alphas[band];
        if let (Some(eps), true) = (correlation, is_detail) {
            let eps = T::lit(eps);
            let two = T::lit(2.0);
            let similarity = ((two * r * h + eps) / (r * r + h * h + eps)).clamp_to(T::zero(), T::one());
            alpha = alpha * (w + (T::one() - w) * similarity);
        }
        (T::one() - alpha) * r + alpha * h
    })?;
    idwt2(&fused)
}

/// Multilevel DWT fusion with the coarse-first band schedule of
/// [`band_alpha`].
pub fn fuse_dwt<T: Scalar>(reliable: &Image<T>, hallucinatory: &Image<T>, params: &FusionParams) -> Result<Image<T>> {
    if let Some(out) = endpoints(reliable, hallucinatory, params)? {
        return Ok(out);
    }
    fuse_pyramids(reliable, hallucinatory, params.weight, params.levels, params.wavelet, None)
}

/// DWT fusion that trusts the hallucinatory detail more where both inputs
/// agree. Per detail coefficient pair `(r, h)` the similarity
/// `m = clamp((2rh + eps) / (r^2 + h^2 + eps), 0, 1)` raises the blend to
/// `alpha_b (w + (1 - w) m)`; the approximation band uses `alpha_b`.
pub fn fuse_dwt_corr<T: Scalar>(reliable: &Image<T>, hallucinatory: &Image<T>, params: &FusionParams) -> Result<Image<T>> {
    if let Some(out) = endpoints(reliable, hallucinatory, params)? {
        return Ok(out);
    }
    fuse_pyramids(
        reliable,
        hallucinatory,
        params.weight,
        params.levels,
        params.wavelet,
        Some(params.corr_eps),
    )
}

/// Fuses every 8x8 region independently (haar, two levels) with its own
/// weight from `weights`, one entry per region. Images whose size is not a
/// multiple of 8 are reflect-padded and cropped back.
pub fn fuse_dwt_patchwise<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    weights: &Image<f64>,
    correlation: bool,
    corr_eps: f64,
) -> Result<Image<T>> {
    reliable.check_same_dims(hallucinatory)?;
    let (height, width) = reliable.dims();
    let expected = ConfidenceMap::<T>::dims_for(height, width);
    crate::error::ensure!(
        weights.dims() == expected,
        DimensionMismatch,
        "{}x{} region weights for a {height}x{width} image",
        weights.height(),
        weights.width()
    );
    let r = pad_reflect_to_multiple(reliable, PATCH);
    let h = pad_reflect_to_multiple(hallucinatory, PATCH);
    let mut out = Image::zeros(r.height(), r.width());
    let take = |img: &Image<T>, by: usize, bx: usize| {
        Image::from_fn(PATCH, PATCH, |y, x| img[(by * PATCH + y, bx * PATCH + x)])
    };
    for by in 0..expected.0 {
        for bx in 0..expected.1 {
            let params = FusionParams {
                method: if correlation { FusionMethod::DwtCorr } else { FusionMethod::Dwt },
                weight: weights[(by, bx)],
                levels: PATCH_LEVELS,
                wavelet: Wavelet::Haar,
                corr_eps,
                ..FusionParams::default()
            };
            let (rp, hp) = (take(&r, by, bx), take(&h, by, bx));
            let fused = if correlation {
                fuse_dwt_corr(&rp, &hp, &params)?
            } else {
                fuse_dwt(&rp, &hp, &params)?
            };
            for y in 0..PATCH {
                out.row_mut(by * PATCH + y)[bx * PATCH..(bx + 1) * PATCH].copy_from_slice(fused.row(y));
            }
        }
    }
    Ok(crop(&out, height, width))
}

/// Confidence-aware patch-wise DWT fusion: each region is fused at
/// `region_weight(w, c, t)`.
pub fn fuse_dwt_guided<T: Scalar>(
    reliable: &Image<T>,
    hallucinatory: &Image<T>,
    conf: &ConfidenceMap<T>,
    params: &FusionParams,
) -> Result<Image<T>> {
    params.validate()?;
    reliable.check_same_dims(hallucinatory)?;
    conf.check_covers(reliable.height(), reliable.width())?;
    let weights = Image::from_fn(conf.rows(), conf.cols(), |y, x| {
        region_weight(params.weight, conf.get(y, x).as_f64(), params.threshold)
    });
    fuse_dwt_patchwise(
        reliable,
        hallucinatory,
        &weights,
        params.method == FusionMethod::DwtCorr,
        params.corr_eps,
    )
}
