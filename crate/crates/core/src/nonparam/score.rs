use serde::Serialize;

use super::kde::DensityCurve;
use crate::grid::Grid;

/// Relative density floor used when none is given: 5% of the largest density value.
pub const DEFAULT_FLOOR_FRACTION: f64 = 0.05;

/// Log-density derivative `s = f'/f` and its derivative `s' = f''/f - s²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreCurve {
    pub grid: Grid,
    pub s: Vec<f64>,
    pub s1: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScoreCurve {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Scores wherever `f >= floor`; other points are masked and carry zeros.
pub fn score_from_density(d: &DensityCurve, floor: f64) -> ScoreCurve {
    let m = d.grid.len();
    let mut s = vec![0.0; m];
    let mut s1 = vec![0.0; m];
    let mut mask = vec![false; m];
    for i in 0..m {
        let f = d.f[i];
        if f >= floor && f > 0.0 && d.f1[i].is_finite() && d.f2[i].is_finite() {
            let si = d.f1[i] / f;
            s[i] = si;
            s1[i] = d.f2[i] / f - si * si;
            mask[i] = true;
        }
    }
    ScoreCurve { grid: d.grid.clone(), s, s1, mask }
}

/// [`DEFAULT_FLOOR_FRACTION`] times the largest grid density.
pub fn default_floor(d: &DensityCurve) -> f64 {
    DEFAULT_FLOOR_FRACTION * d.max_density()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_density_derivs;

    fn exact_normal(mean: f64, var: f64, xs: Vec<f64>) -> DensityCurve {
        let grid = Grid::new(xs).unwrap();
        let d: Vec<[f64; 3]> = grid.points().iter().map(|&x| normal_density_derivs(x, mean, var)).collect();
        DensityCurve {
            f: d.iter().map(|v| v[0]).collect(),
            f1: d.iter().map(|v| v[1]).collect(),
            f2: d.iter().map(|v| v[2]).collect(),
            cdf: vec![0.0; grid.len()],
            grid,
        }
    }

    #[test]
    fn standard_normal_score() {
        let d = exact_normal(0.0, 1.0, vec![0.0, 1.0, 2.0]);
        let sc = score_from_density(&d, 1e-6);
        assert!((sc.s[1] + 1.0).abs() < 1e-12);
        assert!((sc.s1[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_normal_score() {
        let d = exact_normal(2.0, 4.0, vec![-1.0, 0.0, 1.0]);
        let sc = score_from_density(&d, 1e-6);
        assert!((sc.s[1] - 0.5).abs() < 1e-12);
        assert!((sc.s1[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn tail_points_are_masked() {
        let d = exact_normal(0.0, 1.0, vec![0.0, 1.0, 4.0]);
        let sc = score_from_density(&d, default_floor(&d));
        assert_eq!(sc.mask, vec![true, true, false]);
        assert_eq!(sc.s[2], 0.0);
    }
}
