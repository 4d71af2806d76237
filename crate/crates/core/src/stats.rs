//! Two-parameter least squares shared by the degree-law and scaling-law fits.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("singular fit: abscissae have zero spread")]
    SingularFit,
    #[error("non-finite value in fit input")]
    NonFinite,
}

/// `y = intercept + slope * x` with coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self, FitError> {
        assert_eq!(xs.len(), ys.len(), "fit abscissae and ordinates differ in length");
        if xs.len() < 2 {
            return Err(FitError::InsufficientData { needed: 2, got: xs.len() });
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite);
        }
        let n = xs.len() as f64;
        let x_mean = xs.iter().sum::<f64>() / n;
        let y_mean = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
        let x_scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if sxx <= 1e-24 * x_scale * x_scale * n {
            return Err(FitError::SingularFit);
        }
        let slope = sxy / sxx;
        let intercept = y_mean - slope * x_mean;
        let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
        let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
        let ss_res: f64 = residuals.iter().map(|r| r * r).sum();

        // Normal equations: residuals are orthogonal to both design columns.
        let y_scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1.0);
        let tol = 1e-9 * n * x_scale * y_scale;
        let r_sum: f64 = residuals.iter().sum();
        let r_dot_x: f64 = residuals.iter().zip(xs).map(|(r, x)| r * x).sum();
        debug_assert!(r_sum.abs() <= tol && r_dot_x.abs() <= tol, "least-squares residuals not orthogonal");

        let r_squared = if ss_tot > 0.0 {
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        } else {
            1.0
        };
        Ok(LinearFit { intercept, slope, r_squared })
    }

    pub fn residuals(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        xs.iter().zip(ys).map(|(x, y)| y - self.intercept - self.slope * x).collect()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation / sqrt(len)).
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
