//! Log-log regression of error ladders.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Power-law fit e ~ exp(intercept) * parameter^slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// d ln(error) / d ln(parameter).
    pub slope: f64,
    /// ln(error) extrapolated to parameter = 1.
    pub intercept: f64,
    /// Root-mean-square misfit in ln units.
    pub residual: f64,
}

/// Ordinary least squares on (ln parameter, ln error).
///
/// Requires at least four points, positive finite coordinates, and at least
/// two distinct parameters. Callers whose errors can reach an exact zero
/// floor them at their quadrature tolerance before fitting; a zero here is
/// rejected because its logarithm would dominate the regression.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(CoreError::FitRejected {
            reason: format!("need at least 4 ladder points, got {}", points.len()),
        });
    }
    for &(p, e) in points {
        if !(p > 0.0) || !p.is_finite() {
            return Err(CoreError::FitRejected {
                reason: format!("parameter {p} is not positive and finite"),
            });
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(CoreError::FitRejected {
                reason: format!("error {e} at parameter {p} is not positive and finite"),
            });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx < 1e-12 {
        return Err(CoreError::FitRejected {
            reason: "parameters are all equal; slope is undetermined".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit { slope, intercept, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_inverse_law_is_recovered() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n| (n, 3.0 / n)).collect();
        let fit = fit_slope(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3.0_f64.ln(), epsilon = 1e-12);
        assert!(fit.residual < 1e-13);
    }

    #[test]
    fn exact_linear_law_is_recovered() {
        let pts: Vec<(f64, f64)> =
            [0.2, 0.1, 0.05, 0.025].iter().map(|&h| (h, 2.0 * h)).collect();
        let fit = fit_slope(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 2.0_f64.ln(), epsilon = 1e-12);
        assert!(fit.residual < 1e-13);
    }

    #[test]
    fn five_percent_noise_moves_the_slope_less_than_a_tenth() {
        // worst-case +/-5 percent multiplicative noise with alternating sign,
        // which tilts a 4-point fit the most
        for truth in [-1.0, -0.5, 1.0, 2.0] {
            let signs = [1.05, 0.95, 1.05, 0.95];
            let pts: Vec<(f64, f64)> = [8.0_f64, 16.0, 32.0, 64.0]
                .iter()
                .zip(signs)
                .map(|(&n, s)| (n, 1.7 * n.powf(truth) * s))
                .collect();
            let fit = fit_slope(&pts).unwrap();
            assert!(
                (fit.slope - truth).abs() < 0.1,
                "slope {} drifted from {truth}",
                fit.slope
            );
            assert!(fit.residual < 0.06);
        }
    }

    #[test]
    fn bad_ladders_are_rejected() {
        let short = [(8.0, 1.0), (16.0, 0.5), (32.0, 0.25)];
        assert!(matches!(fit_slope(&short), Err(CoreError::FitRejected { .. })));
        let zero = [(8.0, 1.0), (16.0, 0.5), (32.0, 0.0), (64.0, 0.1)];
        assert!(matches!(fit_slope(&zero), Err(CoreError::FitRejected { .. })));
        let negative_param = [(8.0, 1.0), (-16.0, 0.5), (32.0, 0.2), (64.0, 0.1)];
        assert!(matches!(fit_slope(&negative_param), Err(CoreError::FitRejected { .. })));
        let degenerate = [(8.0, 1.0), (8.0, 0.5), (8.0, 0.2), (8.0, 0.1)];
        assert!(matches!(fit_slope(&degenerate), Err(CoreError::FitRejected { .. })));
    }
}
