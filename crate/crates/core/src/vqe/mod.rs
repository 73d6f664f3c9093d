//! Noiseless VQE: exact-statevector cost, analytic gradients, L-BFGS
//! minimization and warm-started sweeps over the boundary field.

mod lbfgs;
mod sweep;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lbfgs::{minimize as lbfgs_minimize, LbfgsOptions, LbfgsReport, Objective, Termination};
pub use sweep::{sweep, SweepDirection, SweepPoint, SweepResult};

use crate::ansatz::{build_circuit, HvaConfig, ParamVector};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, IsingChainSpec};
use crate::statevector::{apply_generator, apply_unchecked, Circuit, CompiledObservable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqeConfig {
    pub max_iters_first: usize,
    pub max_iters_subsequent: usize,
    /// Random initial angles are drawn uniformly from this interval.
    pub init_range: (f64, f64),
    pub seed: u64,
    pub gradient_tolerance: f64,
    pub energy_change_tolerance: f64,
    /// L-BFGS history length.
    pub history: usize,
    /// Extra random-start attempts for a point that fails to converge.
    pub restarts: usize,
}

impl Default for VqeConfig {
    fn default() -> Self {
        Self {
            max_iters_first: 7000,
            max_iters_subsequent: 1000,
            init_range: (-0.3 * PI, 0.3 * PI),
            seed: 0,
            gradient_tolerance: 1e-8,
            energy_change_tolerance: 1e-12,
            history: 10,
            restarts: 0,
        }
    }
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters_first == 0 || self.max_iters_subsequent == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        let (lo, hi) = self.init_range;
        if !(hi > 0.0 && hi.is_finite()) || lo != -hi {
            return Err(Error::Config(format!(
                "init_range ({lo}, {hi}) must be a non-empty interval symmetric about 0"
            )));
        }
        if !(self.gradient_tolerance >= 0.0 && self.energy_change_tolerance >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.history == 0 {
            return Err(Error::Config("history must be positive".into()));
        }
        Ok(())
    }

    fn lbfgs_options(&self, max_iters: usize) -> LbfgsOptions {
        LbfgsOptions {
            history: self.history,
            max_iters,
            gradient_tolerance: self.gradient_tolerance,
            energy_change_tolerance: self.energy_change_tolerance,
            ..LbfgsOptions::default()
        }
    }
}

/// Uniform random angles in `init_range`.
pub fn random_initial_params(config: &HvaConfig, vqe: &VqeConfig, rng: &mut impl Rng) -> ParamVector {
    let (lo, hi) = vqe.init_range;
    ParamVector((0..config.num_params()).map(|_| rng.gen_range(lo..hi)).collect())
}

/// The energy `⟨ψ(θ)|H|ψ(θ)⟩` of one chain as a function of the ansatz angles.
#[derive(Debug, Clone)]
pub struct EnergyLandscape {
    config: HvaConfig,
    circuit: Circuit,
    hamiltonian: CompiledObservable,
}

impl EnergyLandscape {
    pub fn new(spec: &IsingChainSpec, config: &HvaConfig) -> Result<Self> {
        let circuit = build_circuit(config, spec.length, &ParamVector::zeros(config))?;
        let hamiltonian = CompiledObservable::new(&build_hamiltonian(spec)?)?;
        Ok(Self {
            config: *config,
            circuit,
            hamiltonian,
        })
    }

    pub fn num_params(&self) -> usize {
        self.config.num_params()
    }

    pub fn energy(&mut self, params: &[f64]) -> Result<f64> {
        self.circuit.bind(params)?;
        self.hamiltonian.expectation(&self.circuit.run()?)
    }

    /// Energy and its gradient by reverse-mode (adjoint) differentiation:
    /// one forward pass, then one backward sweep carrying `H|ψ⟩`.
    pub fn energy_and_gradient(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.circuit.bind(params)?;
        let n = self.circuit.qubits();
        let mut phi = self.circuit.run()?.amplitudes().to_vec();
        let energy = self.hamiltonian.expectation_raw(&phi)?;
        let mut lambda = vec![Complex64::new(0.0, 0.0); phi.len()];
        self.hamiltonian.apply_raw(&phi, &mut lambda);
        let mut scratch = phi.clone();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (gate, slot) in self.circuit.gates().iter().zip(self.circuit.slots()).rev() {
            if let Some(s) = slot {
                // dE/dθ_gate = Im⟨λ|P|φ⟩ for a gate exp(-iθP/2).
                scratch.copy_from_slice(&phi);
                apply_generator(&mut scratch, n, gate);
                let overlap: Complex64 = lambda.iter().zip(&scratch).map(|(l, p)| l.conj() * p).sum();
                grad[s.param] += s.sign * overlap.im;
            }
            let inverse = gate.inverse();
            apply_unchecked(&mut phi, n, &inverse);
            apply_unchecked(&mut lambda, n, &inverse);
        }
        Ok(energy)
    }

    /// Gradient by the two-point shift rule, shifting each gate occurrence
    /// separately. Shifted circuits run in parallel; the sum is taken in
    /// gate order so the result does not depend on scheduling.
    pub fn parameter_shift_gradient(&mut self, params: &[f64]) -> Result<Vec<f64>> {
        self.circuit.bind(params)?;
        let circuit = &self.circuit;
        let hamiltonian = &self.hamiltonian;
        let occurrences: Vec<(usize, usize, f64)> = circuit
            .slots()
            .iter()
            .enumerate()
            .filter_map(|(k, slot)| slot.map(|s| (k, s.param, s.sign)))
            .collect();
        let terms = occurrences
            .par_iter()
            .map(|&(k, param, sign)| {
                let gate = circuit.gates()[k];
                let angle = gate.angle().expect("parametrized gate");
                let plus = hamiltonian.expectation(&circuit.run_with_override(k, gate.with_angle(angle + FRAC_PI_2))?)?;
                let minus = hamiltonian.expectation(&circuit.run_with_override(k, gate.with_angle(angle - FRAC_PI_2))?)?;
                Ok((param, sign * 0.5 * (plus - minus)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grad = vec![0.0; self.num_params()];
        for (param, value) in terms {
            grad[param] += value;
        }
        Ok(grad)
    }
}

impl Objective for EnergyLandscape {
    fn dim(&self) -> usize {
        self.num_params()
    }

    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.energy_and_gradient(x, grad)
    }
}

/// `⟨ψ(θ)|H|ψ(θ)⟩` on the exact statevector.
pub fn cost(params: &ParamVector, spec: &IsingChainSpec, config: &HvaConfig) -> Result<f64> {
    EnergyLandscape::new(spec, config)?.energy(params.as_slice())
}

/// Parameter-shift gradient of [`cost`].
pub fn gradient(params: &ParamVector, spec: &IsingChainSpec, config: &HvaConfig) -> Result<Vec<f64>> {
    EnergyLandscape::new(spec, config)?.parameter_shift_gradient(params.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub h_value: f64,
    pub optimal_params: ParamVector,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub converged: bool,
    pub iteration_trace: Vec<TracePoint>,
}

/// Minimizes the energy from `initial` with the first-point iteration cap.
pub fn minimize(
    spec: &IsingChainSpec,
    ansatz: &HvaConfig,
    vqe: &VqeConfig,
    initial: &ParamVector,
) -> Result<VqeResult> {
    minimize_capped(spec, ansatz, vqe, initial, vqe.max_iters_first)
}

pub fn minimize_capped(
    spec: &IsingChainSpec,
    ansatz: &HvaConfig,
    vqe: &VqeConfig,
    initial: &ParamVector,
    max_iters: usize,
) -> Result<VqeResult> {
    vqe.validate()?;
    if initial.len() != ansatz.num_params() {
        return Err(Error::ParameterCount {
            expected: ansatz.num_params(),
            found: initial.len(),
        });
    }
    let mut landscape = EnergyLandscape::new(spec, ansatz)?;
    let report = lbfgs::minimize(&mut landscape, initial.as_slice(), &vqe.lbfgs_options(max_iters))?;
    log::debug!(
        "h_l={:.6} E={:.12} iters={} {:?}",
        spec.left_field,
        report.value,
        report.iterations,
        report.termination
    );
    Ok(VqeResult {
        h_value: spec.left_field,
        optimal_params: ParamVector(report.x),
        energy: report.value,
        gradient_norm: report.gradient_norm,
        iterations: report.iterations,
        evaluations: report.evaluations,
        termination: report.termination,
        converged: report.termination.is_converged(),
        iteration_trace: report
            .trace
            .into_iter()
            .map(|(iteration, energy)| TracePoint { iteration, energy })
            .collect(),
    })
}
