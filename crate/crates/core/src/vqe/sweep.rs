//! Warm-started VQE sweeps over the left boundary field.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{minimize_capped, random_initial_params, VqeConfig, VqeResult};
use crate::ansatz::{run_ansatz, HvaConfig, ParamRecord, ParamVector};
use crate::error::{Error, Result};
use crate::fermion::reference_ground_energy;
use crate::model::{build_kink_operator, IsingChainSpec, RightFieldRule};
use crate::report::{format_float, format_optional, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub h_l: f64,
    pub h_r: f64,
    /// Exact ground energy, when an oracle covers this chain.
    pub reference_energy: Option<f64>,
    pub warm_started: bool,
    pub result: Option<VqeResult>,
    /// `⟨N_k⟩` in the optimized state.
    pub kink_number: Option<f64>,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn energy(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.energy)
    }

    pub fn relative_error(&self) -> Option<f64> {
        match (self.energy(), self.reference_energy) {
            (Some(e), Some(r)) if r != 0.0 => Some(((r - e) / r).abs()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub template: IsingChainSpec,
    pub rule: RightFieldRule,
    pub ansatz: HvaConfig,
    pub vqe: VqeConfig,
    pub direction: SweepDirection,
    pub points: Vec<SweepPoint>,
}

fn direction_of(h_values: &[f64]) -> Result<SweepDirection> {
    if h_values.is_empty() {
        return Err(Error::InsufficientData("sweep needs at least one field value".into()));
    }
    if let Some(v) = h_values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("field value {v} is not finite")));
    }
    if h_values.windows(2).all(|w| w[1] > w[0]) && h_values.len() > 1 {
        Ok(SweepDirection::Increasing)
    } else if h_values.windows(2).all(|w| w[1] < w[0]) {
        Ok(SweepDirection::Decreasing)
    } else {
        Err(Error::InvalidInput("field values must be strictly monotone".into()))
    }
}

/// Runs VQE at each `h_l` in order. The first point starts from random angles;
/// every later point starts from the last successful optimum. A point whose
/// evaluation fails is recorded and skipped.
pub fn sweep(
    template: &IsingChainSpec,
    rule: RightFieldRule,
    h_values: &[f64],
    ansatz: &HvaConfig,
    vqe: &VqeConfig,
) -> Result<SweepResult> {
    vqe.validate()?;
    template.validate()?;
    let direction = direction_of(h_values)?;
    let kink = build_kink_operator(template.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(vqe.seed);
    let mut warm: Option<ParamVector> = None;
    let mut points = Vec::with_capacity(h_values.len());

    for &h_l in h_values {
        let spec = rule.apply(template, h_l);
        let warm_started = warm.is_some();
        let (start, cap) = match &warm {
            Some(p) => (p.clone(), vqe.max_iters_subsequent),
            None => (random_initial_params(ansatz, vqe, &mut rng), vqe.max_iters_first),
        };
        let mut outcome = minimize_capped(&spec, ansatz, vqe, &start, cap);
        if let Ok(result) = &mut outcome {
            for _ in 0..vqe.restarts {
                if result.converged {
                    break;
                }
                let retry = random_initial_params(ansatz, vqe, &mut rng);
                let candidate = minimize_capped(&spec, ansatz, vqe, &retry, vqe.max_iters_first)?;
                if candidate.energy < result.energy || candidate.converged {
                    *result = candidate;
                }
            }
        }
        let point = match outcome.and_then(|r| {
            let state = run_ansatz(ansatz, spec.length, &r.optimal_params)?;
            Ok((state.expectation(&kink)?, r))
        }) {
            Ok((kink_number, result)) => {
                warm = Some(result.optimal_params.clone());
                SweepPoint {
                    h_l,
                    h_r: spec.right_field,
                    reference_energy: reference_ground_energy(&spec).ok(),
                    warm_started,
                    result: Some(result),
                    kink_number: Some(kink_number),
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("sweep point h_l={h_l} failed: {e}");
                SweepPoint {
                    h_l,
                    h_r: spec.right_field,
                    reference_energy: reference_ground_energy(&spec).ok(),
                    warm_started,
                    result: None,
                    kink_number: None,
                    error: Some(e.to_string()),
                }
            }
        };
        points.push(point);
    }

    Ok(SweepResult {
        template: *template,
        rule,
        ansatz: *ansatz,
        vqe: *vqe,
        direction,
        points,
    })
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_none()).count()
    }

    /// `(h_l, E)` for successful points, in increasing `h_l`.
    pub fn energy_curve(&self) -> Vec<(f64, f64)> {
        let mut curve: Vec<(f64, f64)> = self.points.iter().filter_map(|p| Some((p.h_l, p.energy()?))).collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        curve
    }

    pub fn max_relative_error(&self) -> Option<f64> {
        self.points.iter().map(|p| p.relative_error()).try_fold(0.0_f64, |acc, e| Some(acc.max(e?)))
    }

    /// Columns: h_l, h_r, energy, energy_per_site, relative_error_vs_exact,
    /// iterations, converged, kink_number. Failed points leave numeric fields empty.
    pub fn write_data_csv<W: Write>(&self, writer: W) -> Result<()> {
        let length = self.template.length as f64;
        let rows = self.points.iter().map(|p| {
            let r = p.result.as_ref();
            vec![
                format_float(p.h_l),
                format_float(p.h_r),
                format_optional(p.energy()),
                format_optional(p.energy().map(|e| e / length)),
                format_optional(p.relative_error()),
                r.map(|r| r.iterations.to_string()).unwrap_or_default(),
                r.is_some_and(|r| r.converged).to_string(),
                format_optional(p.kink_number),
            ]
        });
        write_csv(
            writer,
            &[
                "h_l",
                "h_r",
                "energy",
                "energy_per_site",
                "relative_error_vs_exact",
                "iterations",
                "converged",
                "kink_number",
            ],
            rows,
        )
    }

    /// Columns: point_index, iteration, energy_error (`E_iter - E_exact`).
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows = Vec::new();
        for (index, p) in self.points.iter().enumerate() {
            let (Some(r), Some(reference)) = (&p.result, p.reference_energy) else {
                continue;
            };
            for t in &r.iteration_trace {
                rows.push(vec![index.to_string(), t.iteration.to_string(), format_float(t.energy - reference)]);
            }
        }
        write_csv(writer, &["point_index", "iteration", "energy_error"], rows)
    }

    /// Optimal parameters per successful point, keyed by parameter name.
    pub fn param_records(&self) -> Result<Vec<ParamRecord>> {
        self.points
            .iter()
            .filter_map(|p| {
                let r = p.result.as_ref()?;
                Some(ParamRecord::new(&self.ansatz, &self.rule.apply(&self.template, p.h_l), &r.optimal_params))
            })
            .collect()
    }

    pub fn write_params_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.param_records()?)?;
        Ok(())
    }
}
