//! Least-squares line fits and summary statistics.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// One-sigma standard error of the slope.
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Weighted residual sum of squares.
    pub residual: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    fit_line_weighted(x, y, None)
}

/// Weighted least squares; `weights` are inverse variances when given.
///
/// With weights, the parameter errors come from the weights themselves
/// (`sigma^2 = 1 / sum w`); without them, from the residual scatter.
pub fn fit_line_weighted(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::InsufficientData("fit inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("line fit needs 2 points, got {n}")));
    }
    let w = |k: usize| weights.map_or(1.0, |w| w[k]);
    let sw: f64 = (0..n).map(w).sum();
    let mx = (0..n).map(|k| w(k) * x[k]).sum::<f64>() / sw;
    let my = (0..n).map(|k| w(k) * y[k]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|k| w(k) * (x[k] - mx).powi(2)).sum();
    let sxy: f64 = (0..n).map(|k| w(k) * (x[k] - mx) * (y[k] - my)).sum();
    let syy: f64 = (0..n).map(|k| w(k) * (y[k] - my).powi(2)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::InsufficientData("abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = (0..n)
        .map(|k| w(k) * (y[k] - slope * x[k] - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - residual / syy } else { 1.0 };
    let var_scale = match weights {
        Some(_) => 1.0,
        None if n > 2 => residual / (n - 2) as f64,
        None => 0.0,
    };
    let slope_var = var_scale / sxx;
    let intercept_var = var_scale * (1.0 / sw + mx * mx / sxx);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: slope_var.sqrt(),
        intercept_stderr: intercept_var.sqrt(),
        r_squared,
        points: n,
        residual,
    })
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}
