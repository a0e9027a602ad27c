//! Error metrics: relative error on a scalar quantity, and MAE/RMSE over
//! per-cycle predictions.

use crate::error::{Error, Result};

/// RE = |Y − Ŷ| / |Y|.
pub fn relative_error(actual: f64, predicted: f64) -> Result<f64> {
    if actual == 0.0 {
        return Err(Error::contract("relative error undefined for actual value 0"));
    }
    if !actual.is_finite() || !predicted.is_finite() {
        return Err(Error::contract("relative error: non-finite input"));
    }
    Ok((actual - predicted).abs() / actual.abs())
}

/// MAE = mean(|Y_i − Ŷ_i|).
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let n = actual.len() as f64;
    Ok(actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum::<f64>() / n)
}

/// RMSE = sqrt(mean((Y_i − Ŷ_i)²)).
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let n = actual.len() as f64;
    Ok((actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum::<f64>() / n).sqrt())
}

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::contract(format!(
            "metrics need matching nonempty slices, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    Ok(())
}
