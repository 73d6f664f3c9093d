//! Cubic interpolating splines with analytic derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplineBoundary {
    /// Zero second derivative at both ends.
    #[default]
    Natural,
    /// Third derivative continuous across the second and penultimate knots;
    /// reproduces cubic polynomials exactly.
    NotAKnot,
}

/// Piecewise cubic stored by knot values and knot second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

/// Thomas algorithm for `sub[i] u[i-1] + diag[i] u[i] + sup[i] u[i+1] = rhs[i]`.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], boundary: SplineBoundary) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::SeriesMismatch(x.len(), y.len()));
        }
        let n = x.len();
        let minimum = match boundary {
            SplineBoundary::Natural => 3,
            SplineBoundary::NotAKnot => 4,
        };
        if n < minimum {
            return Err(Error::InsufficientData(format!(
                "a {boundary:?} spline needs at least {minimum} knots, got {n}"
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline data must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("spline abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // Continuity of the first derivative at the interior knots:
        // h[i-1] m[i-1] + 2(h[i-1]+h[i]) m[i] + h[i] m[i+1] = 6 (slope[i] - slope[i-1]).
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
        }
        let m = match boundary {
            SplineBoundary::Natural => {
                let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
                let mut m = vec![0.0; n];
                m[1..n - 1].copy_from_slice(&inner);
                m
            }
            SplineBoundary::NotAKnot => {
                // m0 = (1 + h0/h1) m1 - (h0/h1) m2, and symmetrically at the end;
                // substituting keeps the interior system tridiagonal.
                let (a, b) = (h[0] / h[1], h[n - 2] / h[n - 3]);
                diag[0] += sub[0] * (1.0 + a);
                sup[0] -= sub[0] * a;
                diag[k - 1] += sup[k - 1] * (1.0 + b);
                sub[k - 1] -= sup[k - 1] * b;
                let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
                let mut m = vec![0.0; n];
                m[1..n - 1].copy_from_slice(&inner);
                m[0] = (1.0 + a) * m[1] - a * m[2];
                m[n - 1] = (1.0 + b) * m[n - 2] - b * m[n - 3];
                m
            }
        };
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.x.len() - 2;
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(last),
        }
    }

    /// Derivative of order 0..=3 at `t` (extrapolates the end segments).
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        let i = self.segment(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (c0, c1) = (self.y[i] / h - m0 * h / 6.0, self.y[i + 1] / h - m1 * h / 6.0);
        match order {
            0 => m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + c0 * a + c1 * b,
            1 => -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1,
            2 => (m0 * a + m1 * b) / h,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn interpolates_the_knots() {
        let x = [0.0, 0.3, 0.5, 1.1, 1.4];
        let y = [1.0, -2.0, 0.5, 0.7, 3.0];
        for boundary in [SplineBoundary::Natural, SplineBoundary::NotAKnot] {
            let s = CubicSpline::new(&x, &y, boundary).unwrap();
            for (xi, yi) in x.iter().zip(&y) {
                assert_abs_diff_eq!(s.value(*xi), yi, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn natural_ends_have_zero_curvature() {
        let x = grid(7, 0.0, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::new(&x, &y, SplineBoundary::Natural).unwrap();
        assert_eq!(s.derivative(0.0, 2), 0.0);
        assert_abs_diff_eq!(s.derivative(1.0, 2), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_data_is_reproduced_by_both_conditions() {
        let x = grid(9, -1.0, 2.0);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        for boundary in [SplineBoundary::Natural, SplineBoundary::NotAKnot] {
            let s = CubicSpline::new(&x, &y, boundary).unwrap();
            for t in grid(50, -1.0, 2.0) {
                assert_abs_diff_eq!(s.derivative(t, 1), 3.0, epsilon = 1e-12);
                assert_abs_diff_eq!(s.derivative(t, 2), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn not_a_knot_reproduces_cubics() {
        let x = [0.0, 0.2, 0.35, 0.6, 0.9, 1.0];
        let p = |t: f64| 2.0 * t.powi(3) - t * t + 0.5 * t - 3.0;
        let y: Vec<f64> = x.iter().map(|&t| p(t)).collect();
        let s = CubicSpline::new(&x, &y, SplineBoundary::NotAKnot).unwrap();
        for t in grid(40, 0.0, 1.0) {
            assert_abs_diff_eq!(s.value(t), p(t), epsilon = 1e-12);
            assert_abs_diff_eq!(s.derivative(t, 1), 6.0 * t * t - 2.0 * t + 0.5, epsilon = 1e-11);
            assert_abs_diff_eq!(s.derivative(t, 2), 12.0 * t - 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s.derivative(t, 3), 12.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn natural_end_error_decays_into_the_interior() {
        // For h², the natural condition is wrong at the ends (M = 0 instead of 2);
        // the error in M shrinks by about 2 - √3 per knot away from an end.
        let x = grid(20, 0.0, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let s = CubicSpline::new(&x, &y, SplineBoundary::Natural).unwrap();
        let err = |k: usize| (s.derivative(x[k], 2) - 2.0).abs();
        for k in 1..9 {
            assert!(err(k + 1) < 0.3 * err(k));
        }
        assert!(err(10) < 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CubicSpline::new(&[0.0, 1.0], &[0.0, 1.0], SplineBoundary::Natural).is_err());
        assert!(CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0], SplineBoundary::NotAKnot).is_err());
        assert!(CubicSpline::new(&[0.0, 2.0, 1.0, 3.0], &[0.0; 4], SplineBoundary::Natural).is_err());
        assert!(CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0, f64::NAN, 1.0], SplineBoundary::Natural).is_err());
        assert!(matches!(
            CubicSpline::new(&[0.0, 1.0, 2.0], &[0.0, 1.0], SplineBoundary::Natural),
            Err(Error::SeriesMismatch(3, 2))
        ));
    }

    proptest! {
        #[test]
        fn second_derivative_is_continuous_at_knots(
            ys in proptest::collection::vec(-5.0f64..5.0, 6..20),
            not_a_knot in any::<bool>(),
        ) {
            let x = grid(ys.len(), 0.0, 1.0);
            let boundary = if not_a_knot { SplineBoundary::NotAKnot } else { SplineBoundary::Natural };
            let s = CubicSpline::new(&x, &ys, boundary).unwrap();
            // Across ±eps the derivatives may drift by about 2·eps times the next one.
            let eps = 1e-9;
            let m_max = x.iter().map(|&t| s.derivative(t, 2).abs()).fold(0.0, f64::max);
            let step = x[1] - x[0];
            for &k in &x[1..x.len() - 1] {
                prop_assert!((s.derivative(k - eps, 1) - s.derivative(k + eps, 1)).abs() < 1e-6 + 4.0 * eps * m_max);
                prop_assert!((s.derivative(k - eps, 2) - s.derivative(k + eps, 2)).abs() < 1e-6 + 8.0 * eps * m_max / step);
            }
        }
    }
}
