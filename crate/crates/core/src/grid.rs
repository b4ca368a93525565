use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered evaluation abscissae shared by all x-indexed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGrid(format!("{} points", points.len())));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("not strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 3 || !(hi > lo) {
            return Err(Error::InvalidGrid(format!("linspace({lo}, {hi}, {n})")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Self::new(points)
    }

    /// Equally spaced grid on `[lo, hi]` with the extra points merged in.
    pub fn linspace_with(lo: f64, hi: f64, n: usize, extra: &[f64]) -> Result<Self> {
        let base = Self::linspace(lo, hi, n)?;
        let step = (hi - lo) / (n - 1) as f64;
        let mut pts = base.points;
        for &e in extra {
            pts.retain(|p| (p - e).abs() > 1e-3 * step);
            pts.push(e);
        }
        pts.sort_by(f64::total_cmp);
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.first() && x <= self.last()
    }

    /// Index `i` with `points[i] <= x <= points[i + 1]`, if `x` lies on the grid range.
    pub fn bracket(&self, x: f64) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let i = self.points.partition_point(|&p| p <= x);
        Some(i.saturating_sub(1).min(self.points.len() - 2))
    }

    /// Index of a grid point equal to `x` up to `tol`.
    pub fn index_of(&self, x: f64, tol: f64) -> Option<usize> {
        let i = self.bracket(x)?;
        [i, i + 1].into_iter().find(|&j| (self.points[j] - x).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![0.0, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn bracket_and_merge() {
        let g = Grid::linspace_with(0.0, 1.0, 11, &[0.55, 0.3]).unwrap();
        assert_eq!(g.len(), 12);
        assert!(g.index_of(0.55, 1e-12).is_some());
        let i = g.bracket(0.52).unwrap();
        assert!(g.points()[i] <= 0.52 && g.points()[i + 1] >= 0.52);
        assert_eq!(g.bracket(1.0), Some(g.len() - 2));
        assert_eq!(g.bracket(1.5), None);
    }
}
