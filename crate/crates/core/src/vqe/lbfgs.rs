//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The two-loop recursion and the bracketing/zoom line search follow the
//! textbook formulation (Nocedal & Wright, algorithms 7.4, 3.5 and 3.6). The
//! optimizer is generic over [`Objective`] so it can be exercised on
//! closed-form test functions as well as on circuit energies.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A differentiable scalar function of `dim()` real variables.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns `f(x)` and writes `∇f(x)` into `grad`.
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_iters: usize,
    pub gradient_tolerance: f64,
    pub energy_change_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed inside one line search.
    pub max_line_search_evals: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            history: 10,
            max_iters: 1000,
            gradient_tolerance: 1e-8,
            energy_change_tolerance: 1e-12,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_evals: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    EnergyChange,
    IterationLimit,
    LineSearchFailed,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        matches!(self, Termination::GradientTolerance | Termination::EnergyChange)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsReport {
    /// Lowest-value point evaluated.
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Accepted steps taken.
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// `(iteration, value)` at the start point and after every accepted step.
    pub trace: Vec<(usize, f64)>,
}

impl LbfgsReport {
    pub fn converged(&self) -> bool {
        self.termination.is_converged()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Wraps an objective to count evaluations and remember the best point seen.
struct Tracked<'a, O: Objective> {
    inner: &'a mut O,
    evaluations: usize,
    best: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl<'a, O: Objective> Tracked<'a, O> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let f = self.inner.evaluate(x, grad)?;
        self.evaluations += 1;
        if f.is_finite() && self.best.as_ref().is_none_or(|(b, _, _)| f < *b) {
            self.best = Some((f, x.to_vec(), grad.to_vec()));
        }
        Ok(f)
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    dphi: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizer of the cubic matching `(a, fa, da)` and `(b, fb, db)`, kept away
/// from the interval ends; falls back to bisection when the fit degenerates.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dphi * hi.dphi;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
    let (left, right) = (a.min(b), a.max(b));
    let margin = 0.1 * (right - left);
    if t.is_finite() && t > left + margin && t < right - margin {
        t
    } else {
        mid
    }
}

fn line_search<O: Objective>(
    obj: &mut Tracked<'_, O>,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    dir: &[f64],
    alpha_init: f64,
    opts: &LbfgsOptions,
) -> Result<Option<Trial>> {
    let n = x.len();
    let probe = |alpha: f64, obj: &mut Tracked<'_, O>| -> Result<Trial> {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let mut g = vec![0.0; n];
        let f = obj.eval(&xt, &mut g)?;
        Ok(Trial {
            alpha,
            f,
            dphi: dot(&g, dir),
            x: xt,
            g,
        })
    };
    let armijo = |t: &Trial| t.f <= f0 + opts.c1 * t.alpha * dphi0;
    let curvature = |t: &Trial| t.dphi.abs() <= -opts.c2 * dphi0;

    let mut prev = Trial {
        alpha: 0.0,
        f: f0,
        dphi: dphi0,
        x: x.to_vec(),
        g: Vec::new(),
    };
    let mut alpha = alpha_init;
    let mut evals = 0;
    let (mut lo, mut hi) = loop {
        if evals >= opts.max_line_search_evals {
            return Ok(None);
        }
        let t = probe(alpha, obj)?;
        evals += 1;
        if !t.f.is_finite() {
            // Step overshot into garbage; shrink and retry.
            alpha *= 0.1;
            continue;
        }
        if !armijo(&t) || (prev.alpha > 0.0 && t.f >= prev.f) {
            break (prev, t);
        }
        if curvature(&t) {
            return Ok(Some(t));
        }
        if t.dphi >= 0.0 {
            break (t, prev);
        }
        alpha = 2.0 * t.alpha;
        prev = t;
    };

    while evals < opts.max_line_search_evals {
        if (hi.alpha - lo.alpha).abs() <= f64::EPSILON * lo.alpha.abs().max(1e-300) {
            break;
        }
        let t = probe(interpolate(&lo, &hi), obj)?;
        evals += 1;
        if !armijo(&t) || t.f >= lo.f {
            hi = t;
        } else {
            if curvature(&t) {
                return Ok(Some(t));
            }
            if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, t);
            } else {
                lo = t;
            }
        }
    }
    Ok(None)
}

/// Minimizes `obj` from `x0`. Objective errors abort; a failed line search
/// ends the run with [`Termination::LineSearchFailed`] and the best point seen.
pub fn minimize<O: Objective>(obj: &mut O, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsReport> {
    let n = obj.dim();
    assert_eq!(x0.len(), n, "start point has the wrong dimension");
    let mut tracked = Tracked {
        inner: obj,
        evaluations: 0,
        best: None,
    };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = tracked.eval(&x, &mut g)?;
    let mut trace = vec![(0, f)];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history);
    let mut iterations = 0;

    let termination = loop {
        if norm(&g) <= opts.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break Termination::IterationLimit;
        }

        // Two-loop recursion: dir = -H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dphi0 = dot(&g, &dir);
        if !(dphi0 < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            dphi0 = -dot(&g, &g);
        }
        let alpha_init = if history.is_empty() {
            (1.0 / norm(&dir)).min(1.0)
        } else {
            1.0
        };

        let Some(step) = line_search(&mut tracked, &x, f, dphi0, &dir, alpha_init, opts)? else {
            break Termination::LineSearchFailed;
        };
        iterations += 1;
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if history.len() == opts.history {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let change = (f - step.f).abs();
        x = step.x;
        g = step.g;
        f = step.f;
        trace.push((iterations, f));
        if change <= opts.energy_change_tolerance {
            break Termination::EnergyChange;
        }
    };

    let evaluations = tracked.evaluations;
    let (value, x, g) = match tracked.best {
        Some((bf, bx, bg)) if bf < f => (bf, bx, bg),
        _ => (f, x, g),
    };
    Ok(LbfgsReport {
        gradient_norm: norm(&g),
        x,
        value,
        iterations,
        evaluations,
        termination,
        trace,
    })
}
