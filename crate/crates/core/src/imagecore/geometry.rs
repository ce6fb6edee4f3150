use super::Image;
use crate::error::{ensure, Result};
use crate::Scalar;

/// Maps a possibly out-of-range index onto `0..n` by half-sample symmetric
/// reflection (`d c b a | a b c d | d c b a`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Pads on the bottom/right by reflection so both dimensions are multiples of
/// `multiple`. Returns the input unchanged when already aligned.
pub fn pad_reflect_to_multiple<T: Scalar>(img: &Image<T>, multiple: usize) -> Image<T> {
    let (h, w) = img.dims();
    let ph = h.div_ceil(multiple) * multiple;
    let pw = w.div_ceil(multiple) * multiple;
    if (ph, pw) == (h, w) {
        return img.clone();
    }
    Image::from_fn(ph, pw, |y, x| {
        img[(reflect_index(y as isize, h), reflect_index(x as isize, w))]
    })
}

/// Top-left `height x width` window.
pub fn crop<T: Scalar>(img: &Image<T>, height: usize, width: usize) -> Image<T> {
    assert!(height <= img.height() && width <= img.width());
    if img.dims() == (height, width) {
        return img.clone();
    }
    Image::from_fn(height, width, |y, x| img[(y, x)])
}

/// Top-left offsets of every `size x size` window on a `stride` grid,
/// row-major. Windows that would overhang the border are dropped.
pub fn patch_offsets(height: usize, width: usize, size: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    ensure!(size > 0, InvalidParameter, "patch size must be positive");
    ensure!(stride > 0, InvalidParameter, "patch stride must be positive");
    ensure!(
        size <= height.min(width),
        InvalidParameter,
        "patch size {size} exceeds image {height}x{width}"
    );
    let mut out = Vec::new();
    for y in (0..=height - size).step_by(stride) {
        for x in (0..=width - size).step_by(stride) {
            out.push((y, x));
        }
    }
    Ok(out)
}

pub fn extract_patches<T: Scalar>(img: &Image<T>, size: usize, stride: usize) -> Result<Vec<Image<T>>> {
    Ok(patch_offsets(img.height(), img.width(), size, stride)?
        .into_iter()
        .map(|(oy, ox)| Image::from_fn(size, size, |y, x| img[(oy + y, ox + x)]))
        .collect())
}

/// Applies element `index` of the dihedral group of the square: indices
/// `0..4` rotate counter-clockwise by `index * 90` degrees, `4..8` apply the
/// same rotation followed by a horizontal flip. Index 0 is the identity.
pub fn augment_dihedral<T: Scalar>(img: &Image<T>, index: usize) -> Result<Image<T>> {
    ensure!(index < 8, InvalidParameter, "dihedral index {index} not in 0..8");
    let mut out = img.clone();
    for _ in 0..index % 4 {
        out = rotate_ccw(&out);
    }
    if index >= 4 {
        let w = out.width();
        out = Image::from_fn(out.height(), w, |y, x| out[(y, w - 1 - x)]);
    }
    Ok(out)
}

/// Index of the group element undoing `index`.
pub fn dihedral_inverse(index: usize) -> usize {
    assert!(index < 8);
    // Reflections are involutions.
    if index >= 4 {
        index
    } else {
        (4 - index) % 4
    }
}

fn rotate_ccw<T: Scalar>(img: &Image<T>) -> Image<T> {
    let (h, w) = img.dims();
    Image::from_fn(w, h, |y, x| img[(x, w - 1 - y)])
}

/// Catmull-Rom kernel (a = -0.5).
#[inline]
fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Per output sample: four clamped source indices and their weights.
fn resample_taps(n_in: usize, n_out: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|d| {
            let src = (d as f64 + 0.5) * scale - 0.5;
            let base = src.floor();
            let t = src - base;
            let base = base as isize;
            let mut idx = [0usize; 4];
            let mut wts = [0.0; 4];
            for k in 0..4 {
                let offset = k as isize - 1;
                idx[k] = (base + offset).clamp(0, n_in as isize - 1) as usize;
                wts[k] = cubic(t - offset as f64);
            }
            (idx, wts)
        })
        .collect()
}

/// Separable Catmull-Rom resampling with pixel-center alignment and
/// edge-clamped sampling.
pub fn resize_bicubic<T: Scalar>(img: &Image<T>, new_h: usize, new_w: usize) -> Result<Image<T>> {
    ensure!(
        new_h > 0 && new_w > 0,
        InvalidParameter,
        "target size must be positive, got {new_h}x{new_w}"
    );
    if img.dims() == (new_h, new_w) {
        return Ok(img.clone());
    }
    let (h, w) = img.dims();
    let col_taps = resample_taps(w, new_w);
    let row_taps = resample_taps(h, new_h);

    let horizontal = Image::from_fn(h, new_w, |y, x| {
        let (idx, wts) = &col_taps[x];
        let row = img.row(y);
        T::lit((0..4).map(|k| wts[k] * row[idx[k]].as_f64()).sum())
    });
    Ok(Image::from_fn(new_h, new_w, |y, x| {
        let (idx, wts) = &row_taps[y];
        T::lit((0..4).map(|k| wts[k] * horizontal[(idx[k], x)].as_f64()).sum())
    }))
}
