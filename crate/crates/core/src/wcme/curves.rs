use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonparam::{DensityCurve, RegCurve, ScoreCurve};

/// Regression, density and score of one conditioning group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZCurves {
    pub q: RegCurve,
    pub f: DensityCurve,
    pub s: ScoreCurve,
}

impl ZCurves {
    fn on_grid(&self, grid: &Grid) -> bool {
        self.q.grid == *grid && self.f.grid == *grid && self.s.grid == *grid
    }
}

/// Everything the correction formulas consume, on one shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub grid: Grid,
    pub per_z: BTreeMap<String, ZCurves>,
    pub pooled: ZCurves,
    /// Instrument values `(z1, z2)` used for differencing.
    pub z_pair: (String, String),
}

impl CurveSet {
    pub fn new(
        grid: Grid,
        per_z: BTreeMap<String, ZCurves>,
        pooled: ZCurves,
        z_pair: (String, String),
    ) -> Result<Self> {
        if per_z.len() < 2 {
            return Err(Error::InsufficientInstrument(per_z.len()));
        }
        if !pooled.on_grid(&grid) || per_z.values().any(|c| !c.on_grid(&grid)) {
            return Err(Error::GridMismatch);
        }
        let set = Self { grid, per_z, pooled, z_pair: (String::new(), String::new()) };
        set.with_z_pair(&z_pair.0, &z_pair.1)
    }

    /// Replace the differencing pair; both labels must exist and differ.
    pub fn with_z_pair(mut self, z1: &str, z2: &str) -> Result<Self> {
        for z in [z1, z2] {
            if !self.per_z.contains_key(z) {
                return Err(Error::LabelNotFound(z.to_string()));
            }
        }
        if z1 == z2 {
            return Err(Error::InsufficientInstrument(1));
        }
        self.z_pair = (z1.to_string(), z2.to_string());
        Ok(self)
    }

    pub fn z(&self, label: &str) -> Result<&ZCurves> {
        self.per_z.get(label).ok_or_else(|| Error::LabelNotFound(label.to_string()))
    }

    pub(crate) fn pair(&self) -> (&ZCurves, &ZCurves) {
        (&self.per_z[&self.z_pair.0], &self.per_z[&self.z_pair.1])
    }
}

/// The two labels with the largest weights; ties go to the smaller label.
pub fn most_frequent_pair(weights: &BTreeMap<String, f64>) -> Result<(String, String)> {
    if weights.len() < 2 {
        return Err(Error::InsufficientInstrument(weights.len()));
    }
    let mut v: Vec<(&String, f64)> = weights.iter().map(|(k, &w)| (k, w)).collect();
    // stable sort keeps label order among equal weights
    v.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok((v[0].0.clone(), v[1].0.clone()))
}
