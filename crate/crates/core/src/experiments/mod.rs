//! Sobol′ points, study drivers and rate fits.

pub mod config;
pub mod selftest;
pub mod sobol;
pub mod studies;

pub use config::{StudyConfig, StudyKind};

/// Least-squares line through `(log x, log err)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("rate fit needs at least 3 positive pairs, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit needs at least two distinct abscissae")]
    Degenerate,
}

pub fn fit_rate(xs: &[f64], errs: &[f64]) -> Result<RateFit, FitError> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(errs)
        .filter(|(x, e)| **x > 0.0 && **e > 0.0 && x.is_finite() && e.is_finite())
        .map(|(x, e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(RateFit { slope, intercept, residual, points: pts.len() })
}
