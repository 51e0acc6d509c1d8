use crate::{Error, Result};

/// Reported instead of minus infinity when predictions are exact.
pub const NMSE_FLOOR_DB: f64 = -300.0;

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: targets.len(), got: predictions.len() });
    }
    if targets.is_empty() {
        return Err(Error::Empty("targets"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / targets.len() as f64)
}

/// Normalized MSE in decibels: `10 log10(mse / var(targets))`, with the
/// population variance of the targets over the same window.
pub fn nmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if targets.len() < 2 {
        return Err(Error::Empty("nmse needs at least two targets"));
    }
    let err = mse(predictions, targets)?;
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    if err == 0.0 {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok((10.0 * libm::log10(err / var)).max(NMSE_FLOOR_DB))
}
