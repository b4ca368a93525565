//! One-dimensional interpolation helpers over grid-tabulated curves.

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Linear,
    /// Four-point Lagrange cubic through the nearest valid stencil.
    Cubic,
}

/// Interpolate `values` on `grid` at `x`, honouring the validity mask.
///
/// Returns `None` when `x` is off the grid or either bracketing point is
/// masked. The cubic stencil falls back to linear when a neighbour outside
/// the bracket is masked or missing.
pub fn masked(grid: &Grid, values: &[f64], mask: &[bool], x: f64, method: Method) -> Option<f64> {
    let i = grid.bracket(x)?;
    if !mask[i] || !mask[i + 1] {
        return None;
    }
    let xs = grid.points();
    if method == Method::Cubic && i >= 1 && i + 2 < xs.len() && mask[i - 1] && mask[i + 2] {
        return Some(lagrange4(&xs[i - 1..i + 3], &values[i - 1..i + 3], x));
    }
    if method == Method::Cubic && xs.len() >= 4 {
        // one-sided stencils at the ends of a valid run
        if i + 3 < xs.len() && (i == 0 || !mask[i - 1]) && mask[i + 2] && mask[i + 3] {
            return Some(lagrange4(&xs[i..i + 4], &values[i..i + 4], x));
        }
        if i >= 2 && (i + 2 >= xs.len() || !mask[i + 2]) && mask[i - 1] && mask[i - 2] {
            return Some(lagrange4(&xs[i - 2..i + 2], &values[i - 2..i + 2], x));
        }
    }
    Some(lerp(xs[i], xs[i + 1], values[i], values[i + 1], x))
}

pub fn linear(grid: &Grid, values: &[f64], x: f64) -> Option<f64> {
    let i = grid.bracket(x)?;
    let xs = grid.points();
    Some(lerp(xs[i], xs[i + 1], values[i], values[i + 1], x))
}

#[inline]
fn lerp(x0: f64, x1: f64, y0: f64, y1: f64, x: f64) -> f64 {
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (x - xs[m]) / (xs[j] - xs[m]);
            }
        }
        acc += l * ys[j];
    }
    acc
}

/// Cubic Hermite interpolation from values and first derivatives.
pub fn hermite_cubic(grid: &Grid, y: &[f64], dy: &[f64], x: f64) -> Option<f64> {
    let i = grid.bracket(x)?;
    let xs = grid.points();
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Some(h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1])
}

/// Quintic Hermite interpolation from values and first two derivatives.
pub fn hermite_quintic(grid: &Grid, y: &[f64], d1: &[f64], d2: &[f64], x: f64) -> Option<f64> {
    let i = grid.bracket(x)?;
    let xs = grid.points();
    Some(quintic_segment(
        xs[i],
        xs[i + 1],
        [y[i], d1[i], d2[i]],
        [y[i + 1], d1[i + 1], d2[i + 1]],
        x,
    ))
}

pub(crate) fn quintic_segment(x0: f64, x1: f64, a: [f64; 3], b: [f64; 3], x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * a[0] + h1 * h * a[1] + h2 * h * h * a[2] + h3 * h * h * b[2] + h4 * h * b[1] + h5 * b[0]
}

/// Shape-preserving piecewise cubic (Fritsch–Carlson) through strictly
/// increasing abscissae.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { x, y, d }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.x.partition_point(|&p| p <= x).saturating_sub(1).min(self.x.len() - 2);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
                + (t3 - 2.0 * t2 + t) * h * self.d[i]
                + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
                + (t3 - t2) * h * self.d[i + 1],
        )
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Least-squares projection onto nondecreasing sequences (pool adjacent violators).
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let c = c1 + c2;
            blocks.push(((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c));
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let g = Grid::linspace(-1.0, 2.0, 13).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let y: Vec<f64> = g.points().iter().map(|&x| f(x)).collect();
        let mask = vec![true; g.len()];
        for x in [-1.0, -0.93, 0.1, 1.77, 2.0] {
            let v = masked(&g, &y, &mask, x, Method::Cubic).unwrap();
            assert!((v - f(x)).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn masked_bracket_is_rejected() {
        let g = Grid::linspace(0.0, 1.0, 5).unwrap();
        let y = vec![0.0; 5];
        let mut mask = vec![true; 5];
        mask[2] = false;
        assert!(masked(&g, &y, &mask, 0.3, Method::Linear).is_none());
        assert!(masked(&g, &y, &mask, 0.1, Method::Cubic).is_some());
    }

    #[test]
    fn quintic_reproduces_quintics() {
        let g = Grid::linspace(0.0, 1.0, 4).unwrap();
        let f = |x: f64| [x.powi(5) - x, 5.0 * x.powi(4) - 1.0, 20.0 * x.powi(3)];
        let (y, (d1, d2)): (Vec<f64>, (Vec<f64>, Vec<f64>)) =
            g.points().iter().map(|&x| (f(x)[0], (f(x)[1], f(x)[2]))).unzip();
        let v = hermite_quintic(&g, &y, &d1, &d2, 0.41).unwrap();
        assert!((v - f(0.41)[0]).abs() < 1e-14);
    }

    #[test]
    fn pava_example() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    proptest! {
        #[test]
        fn pava_is_monotone_and_mean_preserving(v in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let iso = isotonic(&v);
            prop_assert!(iso.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let s1: f64 = v.iter().sum();
            let s2: f64 = iso.iter().sum();
            prop_assert!((s1 - s2).abs() < 1e-9);
        }

        #[test]
        fn pchip_preserves_monotonicity(steps in proptest::collection::vec(0.01f64..1.0, 3..20), t in 0.0f64..1.0) {
            let x: Vec<f64> = (0..steps.len()).map(|i| i as f64).collect();
            let y: Vec<f64> = steps.iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
            let p = Pchip::new(x.clone(), y.clone());
            let hi = x[x.len() - 1];
            let a = p.eval(t * hi).unwrap();
            let b = p.eval((t * hi + 0.05).min(hi)).unwrap();
            prop_assert!(b >= a - 1e-12);
        }
    }
}
