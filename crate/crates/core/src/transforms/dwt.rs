use crate::error::{ensure, Result};
use crate::imagecore::{reflect_index, Image};
use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Wavelet {
    #[default]
    Haar,
    /// Daubechies, two vanishing moments (4 taps).
    Db2,
}

impl Wavelet {
    /// Orthonormal analysis low-pass filter.
    fn lowpass(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Wavelet::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        }
    }

    /// Quadrature mirror: `hi[k] = (-1)^k lo[L-1-k]`.
    fn highpass(self) -> Vec<f64> {
        let lo = self.lowpass();
        let n = lo.len();
        (0..n)
            .map(|k| if k % 2 == 0 { lo[n - 1 - k] } else { -lo[n - 1 - k] })
            .collect()
    }
}

impl std::str::FromStr for Wavelet {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(Self::Haar),
            "db2" => Ok(Self::Db2),
            other => Err(crate::Error::InvalidParameter(format!("unknown wavelet {other:?}"))),
        }
    }
}

/// Detail bands of one level. `horizontal` is high-pass along rows and
/// low-pass along columns; for a 2x2 block `[[a, b], [c, d]]` it equals
/// `((a + c) - (b + d)) / 2`. `vertical` is the transpose role
/// (`((a + b) - (c + d)) / 2`) and `diagonal` is high-pass in both
/// (`(a - b - c + d) / 2`).
#[derive(Clone, Debug, PartialEq)]
pub struct DetailBands<T = f64> {
    pub horizontal: Image<T>,
    pub vertical: Image<T>,
    pub diagonal: Image<T>,
}

impl<T: Scalar> DetailBands<T> {
    pub fn bands(&self) -> [&Image<T>; 3] {
        [&self.horizontal, &self.vertical, &self.diagonal]
    }

    pub fn bands_mut(&mut self) -> [&mut Image<T>; 3] {
        [&mut self.horizontal, &mut self.vertical, &mut self.diagonal]
    }
}

/// Multilevel decomposition. `details` and `level_dims` run coarsest level
/// first; `level_dims[i]` is the size of the signal that level was computed
/// from, before any odd-size padding.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid<T = f64> {
    pub wavelet: Wavelet,
    pub approx: Image<T>,
    pub details: Vec<DetailBands<T>>,
    pub level_dims: Vec<(usize, usize)>,
}

impl<T: Scalar> WaveletPyramid<T> {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Sum of squared coefficients over all bands.
    pub fn energy(&self) -> f64 {
        let sq = |img: &Image<T>| img.pixels().iter().map(|p| p.as_f64().powi(2)).sum::<f64>();
        sq(&self.approx)
            + self
                .details
                .iter()
                .flat_map(|d| d.bands())
                .map(sq)
                .sum::<f64>()
    }

    /// Applies `f` to every coefficient together with its band group:
    /// 0 for the approximation, `1..=L` for details from coarsest to finest.
    pub fn zip_bands_with(
        &self,
        other: &Self,
        mut f: impl FnMut(usize, bool, T, T) -> T,
    ) -> Result<Self> {
        ensure!(
            self.wavelet == other.wavelet && self.level_dims == other.level_dims,
            DimensionMismatch,
            "pyramids have different layouts"
        );
        let mut out = self.clone();
        zip_into(&mut out.approx, &other.approx, |a, b| f(0, false, a, b));
        for (level, (dst, src)) in out.details.iter_mut().zip(&other.details).enumerate() {
            for (d, s) in dst.bands_mut().into_iter().zip(src.bands()) {
                zip_into(d, s, |a, b| f(level + 1, true, a, b));
            }
        }
        Ok(out)
    }
}

fn zip_into<T: Scalar>(dst: &mut Image<T>, src: &Image<T>, mut f: impl FnMut(T, T) -> T) {
    for (d, &s) in dst.pixels_mut().iter_mut().zip(src.pixels()) {
        *d = f(*d, s);
    }
}

/// Periodic single-level analysis of an even-length signal.
fn analyze_1d<T: Scalar>(x: &[T], lo: &[T], hi: &[T], approx: &mut [T], detail: &mut [T]) {
    let n = x.len();
    debug_assert!(n % 2 == 0);
    for i in 0..n / 2 {
        let mut a = T::zero();
        let mut d = T::zero();
        for k in 0..lo.len() {
            let v = x[(2 * i + k) % n];
            a += lo[k] * v;
            d += hi[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

/// Adjoint of [`analyze_1d`], which is its inverse for orthonormal filters.
fn synthesize_1d<T: Scalar>(approx: &[T], detail: &[T], lo: &[T], hi: &[T], x: &mut [T]) {
    let n = 2 * approx.len();
    x.iter_mut().for_each(|v| *v = T::zero());
    for i in 0..n / 2 {
        for k in 0..lo.len() {
            x[(2 * i + k) % n] += lo[k] * approx[i] + hi[k] * detail[i];
        }
    }
}

/// Pads to even dimensions by half-sample reflection of the last row/column.
fn pad_even<T: Scalar>(img: &Image<T>) -> Image<T> {
    let (h, w) = img.dims();
    let (ph, pw) = (h + h % 2, w + w % 2);
    if (ph, pw) == (h, w) {
        return img.clone();
    }
    Image::from_fn(ph, pw, |y, x| {
        img[(reflect_index(y as isize, h), reflect_index(x as isize, w))]
    })
}

struct Filters<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Scalar> Filters<T> {
    fn of(wavelet: Wavelet) -> Self {
        Self {
            lo: wavelet.lowpass().into_iter().map(T::lit).collect(),
            hi: wavelet.highpass().into_iter().map(T::lit).collect(),
        }
    }
}

/// One analysis level: rows first, then columns.
fn analyze_level<T: Scalar>(img: &Image<T>, f: &Filters<T>) -> (Image<T>, DetailBands<T>) {
    let padded = pad_even(img);
    let (h, w) = padded.dims();
    let (hh, hw) = (h / 2, w / 2);

    // Row pass: left half low-pass, right half high-pass.
    let mut rows = Image::zeros(h, w);
    let (mut lo_buf, mut hi_buf) = (vec![T::zero(); hw], vec![T::zero(); hw]);
    for y in 0..h {
        analyze_1d(padded.row(y), &f.lo, &f.hi, &mut lo_buf, &mut hi_buf);
        let row = rows.row_mut(y);
        row[..hw].copy_from_slice(&lo_buf);
        row[hw..].copy_from_slice(&hi_buf);
    }

    let mut approx = Image::zeros(hh, hw);
    let mut horizontal = Image::zeros(hh, hw);
    let mut vertical = Image::zeros(hh, hw);
    let mut diagonal = Image::zeros(hh, hw);
    let mut column = vec![T::zero(); h];
    let (mut lo_col, mut hi_col) = (vec![T::zero(); hh], vec![T::zero(); hh]);
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[(y, x)];
        }
        analyze_1d(&column, &f.lo, &f.hi, &mut lo_col, &mut hi_col);
        let (low_target, high_target, cx) = if x < hw {
            (&mut approx, &mut vertical, x)
        } else {
            (&mut horizontal, &mut diagonal, x - hw)
        };
        for y in 0..hh {
            low_target[(y, cx)] = lo_col[y];
            high_target[(y, cx)] = hi_col[y];
        }
    }
    (
        approx,
        DetailBands {
            horizontal,
            vertical,
            diagonal,
        },
    )
}

fn synthesize_level<T: Scalar>(
    approx: &Image<T>,
    details: &DetailBands<T>,
    f: &Filters<T>,
    out_dims: (usize, usize),
) -> Image<T> {
    let (hh, hw) = approx.dims();
    let (h, w) = (2 * hh, 2 * hw);
    let mut rows = Image::zeros(h, w);
    let mut column = vec![T::zero(); h];
    let (mut lo_col, mut hi_col) = (vec![T::zero(); hh], vec![T::zero(); hh]);
    for x in 0..w {
        let (low_src, high_src, cx) = if x < hw {
            (approx, &details.vertical, x)
        } else {
            (&details.horizontal, &details.diagonal, x - hw)
        };
        for y in 0..hh {
            lo_col[y] = low_src[(y, cx)];
            hi_col[y] = high_src[(y, cx)];
        }
        synthesize_1d(&lo_col, &hi_col, &f.lo, &f.hi, &mut column);
        for y in 0..h {
            rows[(y, x)] = column[y];
        }
    }
    let mut out = Image::zeros(h, w);
    for y in 0..h {
        let (lo_row, hi_row) = rows.row(y).split_at(hw);
        synthesize_1d(lo_row, hi_row, &f.lo, &f.hi, out.row_mut(y));
    }
    let (oh, ow) = out_dims;
    if (oh, ow) == (h, w) {
        out
    } else {
        Image::from_fn(oh, ow, |y, x| out[(y, x)])
    }
}

/// Separable multilevel DWT with periodic extension. Odd-sized levels are
/// reflect-padded to even size first; the original size is kept in
/// `level_dims` so [`idwt2`] can crop back exactly.
pub fn dwt2<T: Scalar>(img: &Image<T>, wavelet: Wavelet, levels: usize) -> Result<WaveletPyramid<T>> {
    ensure!(levels >= 1, InvalidParameter, "at least one decomposition level is required");
    let min_dim = img.height().min(img.width());
    ensure!(
        levels < usize::BITS as usize && (1usize << levels) <= min_dim,
        InvalidParameter,
        "{levels} levels need both dimensions >= {}, image is {}x{}",
        1u128 << levels.min(127),
        img.height(),
        img.width()
    );
    let filters = Filters::of(wavelet);
    let mut details = Vec::with_capacity(levels);
    let mut level_dims = Vec::with_capacity(levels);
    let mut current = img.clone();
    for _ in 0..levels {
        level_dims.push(current.dims());
        let (approx, bands) = analyze_level(&current, &filters);
        details.push(bands);
        current = approx;
    }
    details.reverse();
    level_dims.reverse();
    Ok(WaveletPyramid {
        wavelet,
        approx: current,
        details,
        level_dims,
    })
}

pub fn idwt2<T: Scalar>(pyr: &WaveletPyramid<T>) -> Result<Image<T>> {
    ensure!(
        !pyr.details.is_empty() && pyr.details.len() == pyr.level_dims.len(),
        DimensionMismatch,
        "pyramid has {} detail levels and {} level sizes",
        pyr.details.len(),
        pyr.level_dims.len()
    );
    let filters = Filters::of(pyr.wavelet);
    let mut current = pyr.approx.clone();
    for (bands, &(h, w)) in pyr.details.iter().zip(&pyr.level_dims) {
        let half = (h.div_ceil(2), w.div_ceil(2));
        ensure!(
            current.dims() == half && bands.bands().iter().all(|b| b.dims() == half),
            DimensionMismatch,
            "level of size {h}x{w} expects {}x{} bands",
            half.0,
            half.1
        );
        current = synthesize_level(&current, bands, &filters, (h, w));
    }
    Ok(current)
}
