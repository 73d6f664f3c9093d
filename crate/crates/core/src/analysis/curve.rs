//! Energy curves, their spline derivatives and the second-derivative minimum.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spline::{CubicSpline, SplineBoundary};
use crate::error::{Error, Result};
use crate::exact::exact_ground_energy;
use crate::fermion::ground_energy;
use crate::model::{IsingChainSpec, RightFieldRule};
use crate::report::{format_float, write_csv};

/// Output grid is this many times denser than the input sampling.
pub const DEFAULT_DENSITY: usize = 50;

/// Fraction of the input range trimmed from each end of derivative grids.
pub const EDGE_TRIM: f64 = 0.05;

/// Width of the bracket left by golden-section refinement.
pub const ARGMIN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Vqe,
    FreeFermion,
    DenseEd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub length: usize,
    pub transverse_field: f64,
    pub coupling: f64,
    pub rule: RightFieldRule,
    pub source: CurveSource,
}

impl CurveMeta {
    pub fn new(template: &IsingChainSpec, rule: RightFieldRule, source: CurveSource) -> Self {
        Self {
            length: template.length,
            transverse_field: template.transverse_field,
            coupling: template.coupling,
            rule,
            source,
        }
    }
}

/// Ground energy sampled along the swept left field, `h` strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub h: Vec<f64>,
    pub energy: Vec<f64>,
    pub meta: CurveMeta,
}

impl EnergyCurve {
    pub fn new(h: Vec<f64>, energy: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if h.len() != energy.len() {
            return Err(Error::SeriesMismatch(h.len(), energy.len()));
        }
        if h.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("curve abscissae must be strictly increasing".into()));
        }
        if energy.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("curve energies must be finite".into()));
        }
        Ok(Self { h, energy, meta })
    }

    /// Builds a curve from `(h, E)` pairs in any monotone order.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>, meta: CurveMeta) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (h, energy) = pairs.into_iter().unzip();
        Self::new(h, energy, meta)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Natural spline through the samples.
    pub fn spline(&self) -> Result<CubicSpline> {
        self.spline_with(SplineBoundary::Natural)
    }

    pub fn spline_with(&self, boundary: SplineBoundary) -> Result<CubicSpline> {
        if self.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "spline derivatives need at least 4 points, got {}",
                self.len()
            )));
        }
        CubicSpline::new(&self.h, &self.energy, boundary)
    }

    /// Columns: h, energy.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rows = self.h.iter().zip(&self.energy).map(|(h, e)| vec![format_float(*h), format_float(*e)]);
        write_csv(writer, &["h", "energy"], rows)
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| if i + 1 == n { stop } else { start + (stop - start) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn curve_from<F>(template: &IsingChainSpec, rule: RightFieldRule, h_values: &[f64], source: CurveSource, f: F) -> Result<EnergyCurve>
where
    F: Fn(&IsingChainSpec) -> Result<f64> + Sync,
{
    let pairs = h_values
        .par_iter()
        .map(|&h| Ok((h, f(&rule.apply(template, h))?)))
        .collect::<Result<Vec<_>>>()?;
    EnergyCurve::from_pairs(pairs, CurveMeta::new(template, rule, source))
}

/// Exact ground-energy curve from the free-fermion solution (any chain length).
pub fn free_fermion_curve(template: &IsingChainSpec, rule: RightFieldRule, h_values: &[f64]) -> Result<EnergyCurve> {
    curve_from(template, rule, h_values, CurveSource::FreeFermion, ground_energy)
}

/// Exact ground-energy curve from brute-force diagonalization (small chains).
pub fn dense_curve(template: &IsingChainSpec, rule: RightFieldRule, h_values: &[f64]) -> Result<EnergyCurve> {
    curve_from(template, rule, h_values, CurveSource::DenseEd, exact_ground_energy)
}

/// `dE/dh` or `d²E/dh²` on a dense grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCurve {
    pub order: usize,
    pub h: Vec<f64>,
    pub value: Vec<f64>,
    /// Metadata of the energy curve this was computed from.
    pub source: CurveMeta,
}

impl DerivativeCurve {
    pub fn max_abs(&self) -> f64 {
        self.value.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> (f64, f64) {
        self.h
            .iter()
            .zip(&self.value)
            .fold((f64::NAN, f64::INFINITY), |best, (&h, &v)| if v < best.1 { (h, v) } else { best })
    }

    /// Columns: h, derivative.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let header = if self.order == 1 { "d1_energy" } else { "d2_energy" };
        let rows = self.h.iter().zip(&self.value).map(|(h, v)| vec![format_float(*h), format_float(*v)]);
        write_csv(writer, &["h", header], rows)
    }
}

/// Interior grid: the input range minus [`EDGE_TRIM`] at each end, with
/// `density` times as many intervals as the input sampling.
fn interior_grid(curve: &EnergyCurve, density: usize) -> Vec<f64> {
    let (a, b) = (curve.h[0], curve.h[curve.len() - 1]);
    let trim = EDGE_TRIM * (b - a);
    let intervals = ((1.0 - 2.0 * EDGE_TRIM) * (density * (curve.len() - 1)) as f64).round() as usize;
    linspace(a + trim, b - trim, intervals.max(1) + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeOptions {
    /// Output grid intervals per input interval.
    pub density: usize,
    pub boundary: SplineBoundary,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self {
            density: DEFAULT_DENSITY,
            boundary: SplineBoundary::Natural,
        }
    }
}

/// Spline derivative of the requested order on the default dense grid.
pub fn spline_derivative(curve: &EnergyCurve, order: usize) -> Result<DerivativeCurve> {
    spline_derivative_with(curve, order, &DerivativeOptions::default())
}

pub fn spline_derivative_with(curve: &EnergyCurve, order: usize, options: &DerivativeOptions) -> Result<DerivativeCurve> {
    if !(order == 1 || order == 2) {
        return Err(Error::InvalidInput(format!("derivative order must be 1 or 2, got {order}")));
    }
    if options.density == 0 {
        return Err(Error::InvalidInput("grid density must be positive".into()));
    }
    let spline = curve.spline_with(options.boundary)?;
    let h = interior_grid(curve, options.density);
    let value = h.iter().map(|&t| spline.derivative(t, order)).collect();
    Ok(DerivativeCurve {
        order,
        h,
        value,
        source: curve.meta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub h: f64,
    pub second_derivative: f64,
    /// The minimum sits at the edge of the analysed range and is not trusted.
    pub at_boundary: bool,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tolerance: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Location of the minimum of `d²E/dh²`: scan of the dense interior grid,
/// then golden-section refinement on the spline between the neighbouring
/// grid points.
pub fn find_second_derivative_minimum(curve: &EnergyCurve) -> Result<CriticalPoint> {
    find_second_derivative_minimum_with(curve, &DerivativeOptions::default())
}

pub fn find_second_derivative_minimum_with(curve: &EnergyCurve, options: &DerivativeOptions) -> Result<CriticalPoint> {
    let d2 = spline_derivative_with(curve, 2, options)?;
    let spline = curve.spline_with(options.boundary)?;
    let k = d2
        .value
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("grid is non-empty");
    let last = d2.h.len() - 1;
    if k == 0 || k == last {
        log::warn!("second-derivative minimum at the edge of the range (h = {})", d2.h[k]);
        return Ok(CriticalPoint {
            h: d2.h[k],
            second_derivative: d2.value[k],
            at_boundary: true,
        });
    }
    let f = |t: f64| spline.derivative(t, 2);
    let mut h = golden_section_min(f, d2.h[k - 1], d2.h[k + 1], ARGMIN_TOLERANCE);
    // Never return something worse than the grid point that seeded the search.
    if f(h) > d2.value[k] {
        h = d2.h[k];
    }
    Ok(CriticalPoint {
        h,
        second_derivative: f(h),
        at_boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn meta() -> CurveMeta {
        CurveMeta::new(&IsingChainSpec::tied(4, 0.5, 0.5).unwrap(), RightFieldRule::Opposite, CurveSource::DenseEd)
    }

    fn sampled(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> EnergyCurve {
        let h = linspace(a, b, n);
        let e = h.iter().map(|&t| f(t)).collect();
        EnergyCurve::new(h, e, meta()).unwrap()
    }

    #[test]
    fn linspace_endpoints_are_exact() {
        let g = linspace(0.4, 1.0, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.4);
        assert_eq!(g[6], 1.0);
        assert!(linspace(1.0, 0.4, 3).windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn grid_is_interior_and_dense() {
        let curve = sampled(|t| t, 0.0, 1.0, 11);
        let d = spline_derivative(&curve, 1).unwrap();
        assert_abs_diff_eq!(d.h[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(*d.h.last().unwrap(), 0.95, epsilon = 1e-15);
        assert_eq!(d.h.len(), 451);
        assert!(d.h.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn linear_curve_has_zero_second_derivative() {
        let d = spline_derivative(&sampled(|t| 2.0 - 3.0 * t, 0.0, 1.0, 15), 2).unwrap();
        assert!(d.value.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn quadratic_curvature_is_recovered_away_from_the_ends() {
        // The natural end condition perturbs h² near the ends only; deep in the
        // interior the second derivative approaches 2.
        let curve = sampled(|t| t * t, 0.0, 1.0, 20);
        let d = spline_derivative(&curve, 2).unwrap();
        for (h, v) in d.h.iter().zip(&d.value) {
            if (0.3..=0.7).contains(h) {
                assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn not_a_knot_reproduces_quadratic_curvature_everywhere() {
        let options = DerivativeOptions {
            boundary: SplineBoundary::NotAKnot,
            ..DerivativeOptions::default()
        };
        let d = spline_derivative_with(&sampled(|t| t * t, 0.0, 1.0, 20), 2, &options).unwrap();
        assert!(d.value.iter().all(|v| (v - 2.0).abs() < 1e-6));
        let d = spline_derivative_with(&sampled(|t| t.powi(3) - t, 0.0, 1.0, 12), 1, &options).unwrap();
        for (h, v) in d.h.iter().zip(&d.value) {
            assert_abs_diff_eq!(*v, 3.0 * h * h - 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn argmin_is_stable_under_grid_refinement() {
        let template = IsingChainSpec::tied(20, 0.5, 0.0).unwrap();
        let curve = free_fermion_curve(&template, RightFieldRule::Opposite, &linspace(0.4, 1.0, 40)).unwrap();
        let coarse = find_second_derivative_minimum(&curve).unwrap();
        let fine = find_second_derivative_minimum_with(
            &curve,
            &DerivativeOptions {
                density: 2 * DEFAULT_DENSITY,
                ..DerivativeOptions::default()
            },
        )
        .unwrap();
        assert!((coarse.h - fine.h).abs() < 0.6 / (39.0 * DEFAULT_DENSITY as f64));
    }

    #[test]
    fn quartic_minimum_is_located() {
        // d²/dh² (h-0.6)⁴ = 12 (h-0.6)², minimal at 0.6.
        let cp = find_second_derivative_minimum(&sampled(|t| (t - 0.6).powi(4), 0.2, 1.0, 41)).unwrap();
        assert!(!cp.at_boundary);
        assert_abs_diff_eq!(cp.h, 0.6, epsilon = 1e-3);
    }

    #[test]
    fn boundary_minimum_is_flagged() {
        // Not-a-knot, so the end curvature is not forced to zero.
        let opts = DerivativeOptions {
            boundary: SplineBoundary::NotAKnot,
            ..DerivativeOptions::default()
        };
        let cp = find_second_derivative_minimum_with(&sampled(|t| -t.powi(4), 0.0, 1.0, 20), &opts).unwrap();
        assert!(cp.at_boundary);
        assert_abs_diff_eq!(cp.h, 0.95, epsilon = 1e-12);
    }

    #[test]
    fn too_few_points_or_bad_order() {
        let curve = sampled(|t| t, 0.0, 1.0, 3);
        assert!(matches!(spline_derivative(&curve, 2), Err(Error::InsufficientData(_))));
        let curve = sampled(|t| t, 0.0, 1.0, 6);
        assert!(spline_derivative(&curve, 3).is_err());
        assert!(EnergyCurve::new(vec![0.0, 0.0, 1.0, 2.0], vec![0.0; 4], meta()).is_err());
    }

    #[test]
    fn golden_section_on_a_parabola() {
        assert_abs_diff_eq!(golden_section_min(|t| (t - 0.3).powi(2), 0.0, 1.0, 1e-9), 0.3, epsilon = 1e-8);
    }

    #[test]
    fn free_fermion_and_dense_curves_agree() {
        let template = IsingChainSpec::tied(6, 0.5, 0.0).unwrap();
        let h = linspace(0.4, 1.0, 8);
        let a = free_fermion_curve(&template, RightFieldRule::Opposite, &h).unwrap();
        let b = dense_curve(&template, RightFieldRule::Opposite, &h).unwrap();
        for (x, y) in a.energy.iter().zip(&b.energy) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
        assert_eq!(b.meta.source, CurveSource::DenseEd);
    }
}
