//! Weighted least-squares line fits used by the experiment regressions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the weighted residuals (0 for two points).
    pub slope_stderr: f64,
    /// Weighted coefficient of determination.
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_linear_fit(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares with nonnegative weights `w`.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Domain(format!(
            "fit inputs have lengths {}, {}, {}",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    let used: Vec<usize> = (0..x.len())
        .filter(|&i| w[i] > 0.0 && x[i].is_finite() && y[i].is_finite())
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs two weighted points, got {}",
            used.len()
        )));
    }
    let sw: f64 = used.iter().map(|&i| w[i]).sum();
    let mx = used.iter().map(|&i| w[i] * x[i]).sum::<f64>() / sw;
    let my = used.iter().map(|&i| w[i] * y[i]).sum::<f64>() / sw;
    let sxx: f64 = used.iter().map(|&i| w[i] * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|&i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = used.iter().map(|&i| w[i] * (y[i] - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = used
        .iter()
        .map(|&i| w[i] * (y[i] - slope * x[i] - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let n = used.len();
    let slope_stderr = if n > 2 {
        (sse / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r2,
        points: n,
    })
}

/// Fit of `ln y` against `ln x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14 && f.slope_stderr < 1e-14);
    }

    #[test]
    fn zero_weights_drop_points() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 100.0];
        let f = weighted_linear_fit(&x, &y, &[1.0, 1.0, 0.0]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
        assert_eq!(f.points, 2);
        assert!(weighted_linear_fit(&x, &y, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn noisy_line_matches_reference_regression() {
        // Reference values from a hand-computed normal-equation solve.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 5.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 1.1).abs() < 1e-14);
        assert!((f.intercept - 0.0).abs() < 1e-14);
        // SSE = 2.7, Syy = 8.75.
        assert!((f.r2 - (1.0 - 2.7 / 8.75)).abs() < 1e-14);
        assert!((f.slope_stderr - (2.7f64 / 2.0 / 5.0).sqrt()).abs() < 1e-14);
    }
}
