//! Seeded piecewise-smooth test scenes: shaded backgrounds with ellipses,
//! rectangles and striped texture patches. Used as a stand-in corpus when
//! no natural images are at hand.

use rand::Rng;

use crate::imagecore::Image;
use crate::rng;

enum Shape {
    Ellipse { cy: f64, cx: f64, ry: f64, rx: f64, angle: f64 },
    Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
}

impl Shape {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Ellipse { cy, cx, ry, rx, angle } => {
                let (s, c) = angle.sin_cos();
                let (dy, dx) = (y - cy, x - cx);
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                (u / rx).powi(2) + (v / ry).powi(2) <= 1.0
            }
            Shape::Rect { y0, x0, y1, x1 } => y >= y0 && y < y1 && x >= x0 && x < x1,
        }
    }
}

struct Layer {
    shape: Shape,
    base: f64,
    slope_y: f64,
    slope_x: f64,
    /// Stripe amplitude, period in pixels and orientation.
    stripes: Option<(f64, f64, f64)>,
}

impl Layer {
    fn value(&self, y: f64, x: f64) -> f64 {
        let mut v = self.base + self.slope_y * y + self.slope_x * x;
        if let Some((amp, period, angle)) = self.stripes {
            let (s, c) = angle.sin_cos();
            v += amp * (std::f64::consts::TAU * (c * x + s * y) / period).sin();
        }
        v
    }
}

/// A `height x width` scene in `[0.05, 0.95]`, fully determined by `seed`.
pub fn scene(height: usize, width: usize, seed: u64) -> Image<f64> {
    let mut r = rng::stream(seed, &[0x5CE9E]);
    let (hf, wf) = (height as f64, width as f64);
    let scale = hf.max(wf);
    let background = Layer {
        shape: Shape::Rect { y0: 0.0, x0: 0.0, y1: hf, x1: wf },
        base: r.random_range(0.2..0.8),
        slope_y: r.random_range(-0.4..0.4) / scale,
        slope_x: r.random_range(-0.4..0.4) / scale,
        stripes: None,
    };
    let count = r.random_range(10..20);
    let mut layers = vec![background];
    for _ in 0..count {
        let shape = if r.random_bool(0.6) {
            Shape::Ellipse {
                cy: r.random_range(0.0..hf),
                cx: r.random_range(0.0..wf),
                ry: r.random_range(0.04..0.3) * scale,
                rx: r.random_range(0.04..0.3) * scale,
                angle: r.random_range(0.0..std::f64::consts::PI),
            }
        } else {
            let (h0, w0) = (r.random_range(0.05..0.4) * hf, r.random_range(0.05..0.4) * wf);
            let (y0, x0) = (r.random_range(-0.1 * hf..hf - h0), r.random_range(-0.1 * wf..wf - w0));
            Shape::Rect { y0, x0, y1: y0 + h0, x1: x0 + w0 }
        };
        let stripes = r
            .random_bool(0.5)
            .then(|| (r.random_range(0.05..0.2), r.random_range(2.5..8.0), r.random_range(0.0..std::f64::consts::PI)));
        layers.push(Layer {
            shape,
            base: r.random_range(0.1..0.9),
            slope_y: r.random_range(-0.3..0.3) / scale,
            slope_x: r.random_range(-0.3..0.3) / scale,
            stripes,
        });
    }

    // 2x2 supersampling softens the edges a little.
    const OFFSETS: [f64; 2] = [0.25, 0.75];
    Image::from_fn(height, width, |y, x| {
        let mut acc = 0.0;
        for oy in OFFSETS {
            for ox in OFFSETS {
                let (py, px) = (y as f64 + oy, x as f64 + ox);
                let top = layers.iter().rev().find(|l| l.shape.contains(py, px)).expect("background covers all");
                acc += top.value(py, px);
            }
        }
        (acc / 4.0).clamp(0.05, 0.95)
    })
}

/// `count` scenes with seeds derived from `seed`.
pub fn corpus(count: usize, height: usize, width: usize, seed: u64) -> Vec<Image<f64>> {
    (0..count as u64)
        .map(|i| scene(height, width, rng::derive_seed(seed, &[i])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_reproducible_and_varied() {
        let a = scene(48, 64, 3);
        assert_eq!(a, scene(48, 64, 3));
        assert_ne!(a, scene(48, 64, 4));
        assert_eq!(a.dims(), (48, 64));
        assert!(a.pixels().iter().all(|&v| (0.05..=0.95).contains(&v)));
        let mean = a.mean();
        let var = a.pixels().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / a.len() as f64;
        assert!(var > 1e-3);
    }

    #[test]
    fn corpus_members_differ() {
        let c = corpus(3, 32, 32, 1);
        assert_eq!(c.len(), 3);
        assert_ne!(c[0], c[1]);
    }
}
