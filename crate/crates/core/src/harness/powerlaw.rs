//! Log-log least squares for convergence-rate exponents.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("log-log fit requires positive coordinates, got ({x}, {y})")]
    NonPositivePoint { x: f64, y: f64 },
}

/// Ordinary least squares on `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerLawFit {
    /// Fitted exponent.
    pub slope: f64,
    /// Intercept in log space: `log c` for `y = c x^slope`.
    pub intercept: f64,
    /// Coefficient of determination of the log-space fit.
    pub r2: f64,
}

/// Fit `y = c x^slope` by least squares on logs.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    for (x, y) in points {
        if !(*x > 0.0 && *y > 0.0) {
            return Err(FitError::NonPositivePoint { x: *x, y: *y });
        }
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &logs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        r2,
    })
}
