//! From energy curves to transition properties: spline derivatives, the
//! second-derivative minimum, finite-size extrapolation, gap-decay
//! classification and error statistics.

mod curve;
mod gap;
mod scaling;
mod spline;
mod stats;

pub use curve::{
    dense_curve, find_second_derivative_minimum, find_second_derivative_minimum_with, free_fermion_curve,
    golden_section_min, linspace, spline_derivative, spline_derivative_with, CriticalPoint, CurveMeta, CurveSource,
    DerivativeCurve, DerivativeOptions, EnergyCurve, ARGMIN_TOLERANCE, DEFAULT_DENSITY, EDGE_TRIM,
};
pub use gap::{classify_gap_decay, gap_series, DecayModel, ExponentialFit, GapFitResult, PolynomialFit};
pub use scaling::{
    finite_size_scaling, free_fermion_scaling_series, ScalingEntry, ScalingReport, ScalingSeries,
    DEFAULT_FIT_MIN_LENGTH,
};
pub use spline::{CubicSpline, SplineBoundary};
pub use stats::{relative_error_series, rms, rms_labeled, RmsReport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> Result<Line> {
    if x.len() != y.len() {
        return Err(Error::SeriesMismatch(x.len(), y.len()));
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("line fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(Line {
        slope,
        intercept,
        residual,
    })
}
