//! Finite-size scaling of the second-derivative minimum.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{find_second_derivative_minimum, free_fermion_curve, linspace};
use super::fit_line;
use crate::error::{Error, Result};
use crate::model::{IsingChainSpec, RightFieldRule};
use crate::report::{format_float, write_csv};

/// Smallest chain included in the large-L extrapolation by default.
pub const DEFAULT_FIT_MIN_LENGTH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub length: usize,
    pub inv_length: f64,
    pub argmin_h: f64,
    /// The minimum was found at the edge of the analysed range.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub entries: Vec<ScalingEntry>,
    /// Reference critical field, `sqrt(1 - h_x)` for the anti-parallel line.
    pub h_c: f64,
}

impl ScalingSeries {
    pub fn new(mut entries: Vec<ScalingEntry>, h_c: f64) -> Result<Self> {
        entries.sort_by_key(|e| e.length);
        if entries.windows(2).any(|w| w[0].length == w[1].length) {
            return Err(Error::InvalidInput("scaling series has repeated chain lengths".into()));
        }
        Ok(Self { entries, h_c })
    }

    pub fn from_points(points: &[(usize, f64)], h_c: f64) -> Result<Self> {
        let entries = points
            .iter()
            .map(|&(length, argmin_h)| ScalingEntry {
                length,
                inv_length: 1.0 / length as f64,
                argmin_h,
                at_boundary: false,
            })
            .collect();
        Self::new(entries, h_c)
    }

    /// Columns: L, inv_L, argmin_h, h_c_reference, deviation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rows = self.entries.iter().map(|e| {
            vec![
                e.length.to_string(),
                format_float(e.inv_length),
                format_float(e.argmin_h),
                format_float(self.h_c),
                format_float(e.argmin_h - self.h_c),
            ]
        });
        write_csv(writer, &["L", "inv_L", "argmin_h", "h_c_reference", "deviation"], rows)
    }
}

/// Second-derivative minima of free-fermion curves for each chain length,
/// sampled at `points` fields over `[h_start, h_stop]`.
pub fn free_fermion_scaling_series(
    template: &IsingChainSpec,
    rule: RightFieldRule,
    lengths: &[usize],
    h_start: f64,
    h_stop: f64,
    points: usize,
) -> Result<ScalingSeries> {
    let grid = linspace(h_start, h_stop, points);
    let entries = lengths
        .par_iter()
        .map(|&length| {
            let spec = IsingChainSpec { length, ..*template };
            let cp = find_second_derivative_minimum(&free_fermion_curve(&spec, rule, &grid)?)?;
            Ok(ScalingEntry {
                length,
                inv_length: 1.0 / length as f64,
                argmin_h: cp.h,
                at_boundary: cp.at_boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingSeries::new(entries, template.critical_boundary_field())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub series: ScalingSeries,
    pub fit_min_length: usize,
    /// Lengths that entered the linear fit of `h*` against `1/L`.
    pub fit_lengths: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// `intercept - h_c`.
    pub deviation: f64,
    /// Some step between consecutive sizes moves `h*` away from `h_c`.
    pub non_monotone: bool,
    /// `(L, L')` pairs across which `|h* - h_c|` grows.
    pub receding_steps: Vec<(usize, usize)>,
}

/// Extrapolates `h*(L)` to `1/L → 0` with a straight-line fit over the
/// sizes `L ≥ fit_min_length`, and flags sizes that recede from `h_c`.
pub fn finite_size_scaling(series: &ScalingSeries, fit_min_length: usize) -> Result<ScalingReport> {
    if series.entries.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "finite-size scaling needs at least 3 sizes, got {}",
            series.entries.len()
        )));
    }
    let fit: Vec<&ScalingEntry> = series.entries.iter().filter(|e| e.length >= fit_min_length).collect();
    if fit.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} sizes with L >= {fit_min_length} to extrapolate from",
            fit.len()
        )));
    }
    let xs: Vec<f64> = fit.iter().map(|e| e.inv_length).collect();
    let ys: Vec<f64> = fit.iter().map(|e| e.argmin_h).collect();
    let line = fit_line(&xs, &ys)?;
    let distance = |e: &ScalingEntry| (e.argmin_h - series.h_c).abs();
    let receding_steps: Vec<(usize, usize)> = series
        .entries
        .windows(2)
        .filter(|w| distance(&w[1]) > distance(&w[0]))
        .map(|w| (w[0].length, w[1].length))
        .collect();
    Ok(ScalingReport {
        fit_min_length,
        fit_lengths: fit.iter().map(|e| e.length).collect(),
        slope: line.slope,
        intercept: line.intercept,
        deviation: line.intercept - series.h_c,
        non_monotone: !receding_steps.is_empty(),
        receding_steps,
        series: series.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_series_extrapolates_to_itself() {
        let pts: Vec<(usize, f64)> = [4, 8, 40, 100, 500].iter().map(|&l| (l, 0.7)).collect();
        let report = finite_size_scaling(&ScalingSeries::from_points(&pts, 0.7071).unwrap(), 40).unwrap();
        assert_abs_diff_eq!(report.intercept, 0.7, epsilon = 1e-14);
        assert_eq!(report.fit_lengths, vec![40, 100, 500]);
        assert!(!report.non_monotone);
    }

    #[test]
    fn linear_in_inverse_length_is_exact() {
        let pts: Vec<(usize, f64)> = [40, 60, 100, 200].iter().map(|&l| (l, 0.7 + 2.0 / l as f64)).collect();
        let report = finite_size_scaling(&ScalingSeries::from_points(&pts, 0.7).unwrap(), 40).unwrap();
        assert_abs_diff_eq!(report.intercept, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(report.slope, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.deviation, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn receding_precursors_are_flagged() {
        let pts = [(4, 0.80), (8, 0.84), (12, 0.78), (40, 0.73), (100, 0.715)];
        let report = finite_size_scaling(&ScalingSeries::from_points(&pts, 0.7071).unwrap(), 40).unwrap();
        assert!(report.non_monotone);
        assert_eq!(report.receding_steps, vec![(4, 8)]);
    }

    #[test]
    fn errors() {
        let two = ScalingSeries::from_points(&[(4, 0.7), (8, 0.7)], 0.7).unwrap();
        assert!(matches!(finite_size_scaling(&two, 4), Err(Error::InsufficientData(_))));
        let small = ScalingSeries::from_points(&[(4, 0.7), (8, 0.7), (12, 0.7)], 0.7).unwrap();
        assert!(finite_size_scaling(&small, 40).is_err());
        assert!(ScalingSeries::from_points(&[(4, 0.7), (4, 0.8)], 0.7).is_err());
    }

    #[test]
    fn csv_columns() {
        let series = ScalingSeries::from_points(&[(4, 0.75)], 0.7).unwrap();
        let mut out = Vec::new();
        series.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("L,inv_L,argmin_h,h_c_reference,deviation\n4,2.5000000000000000e-1,"));
    }
}
