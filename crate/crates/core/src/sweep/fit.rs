use serde::Serialize;

use crate::error::{Error, Result};

/// Default exclusion threshold: `1e2 ×` the default eigen-residual tolerance.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e2 * 1e-9;

/// Least-squares fit of `log|y| = slope · log x + log_intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub excluded: usize,
}

pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    fit_rate_with_floor(xs, ys, DEFAULT_NOISE_FLOOR)
}

/// As [`fit_rate`], excluding points with `|y| < noise_floor`.
pub fn fit_rate_with_floor(xs: &[f64], ys: &[f64], noise_floor: f64) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} abscissae for {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("rate fit needs positive abscissae, got {x}")));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite() && y.abs() >= noise_floor && **y != 0.0)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    let used = pts.len();
    if used < 3 {
        return Err(Error::InsufficientData {
            usable: used,
            needed: 3,
        });
    }
    let n = used as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("rate fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let log_intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - log_intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        log_intercept,
        r_squared,
        points_used: used,
        excluded: xs.len() - used,
    })
}
