//! RMS deviation and relative-error series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsReport {
    pub rms: f64,
    pub n: usize,
    pub labels: (String, String),
}

/// `sqrt((1/n) Σ (x_i - y_i)²)`.
pub fn rms(x: &[f64], y: &[f64]) -> Result<RmsReport> {
    rms_labeled(x, y, "x", "y")
}

pub fn rms_labeled(x: &[f64], y: &[f64], x_label: &str, y_label: &str) -> Result<RmsReport> {
    if x.len() != y.len() {
        return Err(Error::SeriesMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("rms of empty series".into()));
    }
    let n = x.len();
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(RmsReport {
        rms: (sum / n as f64).sqrt(),
        n,
        labels: (x_label.to_string(), y_label.to_string()),
    })
}

/// `|(ref - est) / ref|` per point; `None` where the reference is zero.
pub fn relative_error_series(estimates: &[f64], references: &[f64]) -> Result<Vec<Option<f64>>> {
    if estimates.len() != references.len() {
        return Err(Error::SeriesMismatch(estimates.len(), references.len()));
    }
    Ok(estimates
        .iter()
        .zip(references)
        .map(|(e, r)| (*r != 0.0).then(|| ((r - e) / r).abs()))
        .collect())
}
