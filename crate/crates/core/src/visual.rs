//! Colour renderings of confidence maps, residuals and error maps.

use crate::error::{ensure, Result};
use crate::fusion::ConfidenceMap;
use crate::imagecore::Image;
use crate::Scalar;

/// Hue for regions at or above the threshold, at full intensity.
pub const CONFIDENT_RGB: [u8; 3] = [0, 150, 60];
/// Hue for regions below the threshold, at full intensity.
pub const UNCONFIDENT_RGB: [u8; 3] = [140, 0, 160];

/// Distance of `c` from the threshold, scaled to `[0, 1]` on its side.
pub fn confidence_intensity(c: f64, threshold: f64) -> f64 {
    if c >= threshold {
        if threshold >= 1.0 {
            0.0
        } else {
            (c - threshold) / (1.0 - threshold)
        }
    } else {
        (threshold - c) / threshold
    }
}

fn blend(hue: [u8; 3], intensity: f64) -> [u8; 3] {
    hue.map(|h| (255.0 + intensity.clamp(0.0, 1.0) * (h as f64 - 255.0)).round() as u8)
}

/// Diverging colour for one confidence value: white at the threshold,
/// shading to green above it and to purple below.
pub fn confidence_color(c: f64, threshold: f64) -> [u8; 3] {
    let intensity = confidence_intensity(c, threshold);
    if c >= threshold {
        blend(CONFIDENT_RGB, intensity)
    } else {
        blend(UNCONFIDENT_RGB, intensity)
    }
}

/// Inverse of [`confidence_color`] up to 8-bit quantisation.
pub fn confidence_from_color(rgb: [u8; 3], threshold: f64) -> f64 {
    // Green shades keep red below green; purple shades the opposite.
    let (hue, above) = if rgb[0] < rgb[1] {
        (CONFIDENT_RGB, true)
    } else if rgb[1] < rgb[0] {
        (UNCONFIDENT_RGB, false)
    } else {
        return threshold;
    };
    // Use the channel with the largest swing for the best resolution.
    let ch = (0..3).max_by_key(|&i| 255 - hue[i] as i32).expect("three channels");
    let intensity = (255.0 - rgb[ch] as f64) / (255.0 - hue[ch] as f64);
    if above {
        threshold + intensity * (1.0 - threshold)
    } else {
        threshold - intensity * threshold
    }
}

/// RGB bytes of the map with every region drawn as a `cell x cell` block.
pub fn colorize_confidence<T: Scalar>(map: &ConfidenceMap<T>, threshold: f64, cell: usize) -> Result<(Vec<u8>, usize, usize)> {
    ensure!(cell > 0, InvalidParameter, "cell size must be positive");
    ensure!(
        (0.0..=1.0).contains(&threshold),
        InvalidParameter,
        "threshold {threshold} outside [0, 1]"
    );
    let (h, w) = (map.rows() * cell, map.cols() * cell);
    let mut rgb = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            rgb.extend_from_slice(&confidence_color(map.get(y / cell, x / cell).as_f64(), threshold));
        }
    }
    Ok((rgb, h, w))
}

/// Signed residual shifted to mid-grey for display.
pub fn residual_view<T: Scalar>(residual: &Image<T>) -> Image<T> {
    residual.map(|v| (v + T::lit(0.5)).clamp_to(T::zero(), T::one()))
}

/// Absolute difference, amplified by `gain` and clipped to `[0, 1]`.
pub fn error_map<T: Scalar>(a: &Image<T>, b: &Image<T>, gain: f64) -> Result<Image<T>> {
    let g = T::lit(gain);
    a.zip_map(b, |x, y| ((x - y).abs() * g).clamp_to(T::zero(), T::one()))
}
