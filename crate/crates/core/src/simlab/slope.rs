use serde::Serialize;

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual on the log scale.
    pub residual: f64,
    pub points: usize,
}

/// Unweighted log–log slope over the pairs with positive finite coordinates.
/// `None` with fewer than two usable pairs or no spread in `x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(SlopeFit { slope, intercept, residual: (rss / n).sqrt(), points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_square_law() {
        let t = [0.05f64, 0.1, 0.2, 0.4];
        let e: Vec<f64> = t.iter().map(|v| 3.0 * v * v).collect();
        let s = fit_loglog_slope(&t, &e).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-6);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_loglog_slope(&[1.0], &[1.0]).is_none());
        assert!(fit_loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    proptest! {
        #[test]
        fn recovers_any_power(c in 0.01f64..100.0, p in -3.0f64..6.0) {
            let t = [0.05f64, 0.1, 0.2, 0.4];
            let e: Vec<f64> = t.iter().map(|v| c * v.powf(p)).collect();
            let s = fit_loglog_slope(&t, &e).unwrap();
            prop_assert!((s.slope - p).abs() < 1e-9);
        }
    }
}
