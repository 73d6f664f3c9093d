//! Dense statevector simulation.
//!
//! Basis ordering: site `i` (1-based) of an `n`-qubit register is bit
//! `n - i` of the basis index, so site 1 is the most significant bit and
//! `|b_1 b_2 … b_n⟩` reads left to right as a binary number. Bit value 0
//! is the `Z = +1` eigenstate.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Observable, Pauli};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Imaginary residue tolerated in a Hermitian expectation value.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Name of the pseudorandom generator used for shot sampling.
pub const SHOT_RNG_NAME: &str = "ChaCha8Rng";

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
fn site_mask(qubits: usize, site: usize) -> usize {
    1 << (qubits - site)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` sites.
    pub fn zero(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidSize(qubits));
        }
        if qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                qubits,
                cap: MAX_QUBITS,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the vector normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                qubits,
                cap: MAX_QUBITS,
            });
        }
        let state = Self { qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NumericalIntegrity(format!(
                "state norm² = {norm} is not 1"
            )));
        }
        Ok(state)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.qubits {
            Err(Error::SiteOutOfRange {
                index: site,
                length: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        for site in gate.sites() {
            self.check_site(site)?;
        }
        if let Gate::Rzz(a, b, _) = gate {
            if a == b {
                return Err(Error::InvalidParameter(format!(
                    "RZZ needs two distinct sites, got ({a}, {b})"
                )));
            }
        }
        apply_unchecked(&mut self.amplitudes, self.qubits, gate);
        Ok(())
    }

    /// Applies the inverse of `gate`.
    pub fn apply_inverse(&mut self, gate: &Gate) -> Result<()> {
        self.apply(&gate.inverse())
    }

    pub fn expectation(&self, observable: &Observable) -> Result<f64> {
        CompiledObservable::new(observable)?.expectation(self)
    }

    /// Finite-shot estimate of `⟨observable⟩`.
    ///
    /// Terms are split into a Z-diagonal group (measured directly) and an
    /// X-diagonal group (measured after a Hadamard layer). Each group is
    /// sampled `shots` times from a `ChaCha8Rng` seeded with `seed`.
    pub fn sample_expectation(
        &self,
        observable: &Observable,
        shots: usize,
        seed: u64,
    ) -> Result<f64> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be positive".into()));
        }
        check_length(observable, self.qubits)?;
        let mut z_terms = Vec::new();
        let mut x_terms = Vec::new();
        for term in observable.terms() {
            let mask = term
                .factors()
                .iter()
                .fold(0usize, |m, &(site, _)| m | site_mask(self.qubits, site));
            if term.is_uniform(Pauli::Z) {
                z_terms.push((mask, term.coefficient));
            } else if term.is_uniform(Pauli::X) {
                x_terms.push((mask, term.coefficient));
            } else {
                return Err(Error::UnsupportedGrouping(term.label()));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = observable.offset();
        if !z_terms.is_empty() {
            total += sample_group(&self.probabilities(), &z_terms, shots, &mut rng);
        }
        if !x_terms.is_empty() {
            let mut rotated = self.clone();
            for site in 1..=self.qubits {
                rotated.apply(&Gate::Hadamard(site))?;
            }
            total += sample_group(&rotated.probabilities(), &x_terms, shots, &mut rng);
        }
        Ok(total)
    }
}

fn sample_group(
    probabilities: &[f64],
    terms: &[(usize, f64)],
    shots: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut cdf = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p;
        cdf.push(acc);
    }
    let mut sum = 0.0;
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let outcome = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        sum += terms
            .iter()
            .map(|&(mask, c)| {
                if (outcome & mask).count_ones() % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum::<f64>();
    }
    sum / shots as f64
}

fn check_length(observable: &Observable, qubits: usize) -> Result<()> {
    if observable.length() != qubits {
        Err(Error::LengthMismatch {
            expected: qubits,
            found: observable.length(),
        })
    } else {
        Ok(())
    }
}

/// Elementary gates. Rotations follow `R_P(θ) = exp(-i θ/2 P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Hadamard(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Rzz(usize, usize, f64),
}

impl Gate {
    pub fn sites(&self) -> Vec<usize> {
        match *self {
            Gate::Hadamard(q) | Gate::Rx(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Rzz(a, b, _) => vec![a, b],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Hadamard(_) => None,
            Gate::Rx(_, t) | Gate::Rz(_, t) | Gate::Rzz(_, _, t) => Some(t),
        }
    }

    pub fn with_angle(self, angle: f64) -> Gate {
        match self {
            Gate::Hadamard(q) => Gate::Hadamard(q),
            Gate::Rx(q, _) => Gate::Rx(q, angle),
            Gate::Rz(q, _) => Gate::Rz(q, angle),
            Gate::Rzz(a, b, _) => Gate::Rzz(a, b, angle),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self.angle() {
            Some(t) => self.with_angle(-t),
            None => *self,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Hadamard(_) => "H",
            Gate::Rx(..) => "RX",
            Gate::Rz(..) => "RZ",
            Gate::Rzz(..) => "RZZ",
        }
    }
}

pub(crate) fn apply_unchecked(amps: &mut [Complex64], qubits: usize, gate: &Gate) {
    match *gate {
        Gate::Hadamard(q) => {
            let m = site_mask(qubits, q);
            for_each_pair(amps, m, |a0, a1| {
                let (x, y) = (*a0, *a1);
                *a0 = (x + y) * FRAC_1_SQRT_2;
                *a1 = (x - y) * FRAC_1_SQRT_2;
            });
        }
        Gate::Rx(q, theta) => {
            let m = site_mask(qubits, q);
            let (s, c) = (theta / 2.0).sin_cos();
            let mis = Complex64::new(0.0, -s);
            for_each_pair(amps, m, |a0, a1| {
                let (x, y) = (*a0, *a1);
                *a0 = x * c + y * mis;
                *a1 = x * mis + y * c;
            });
        }
        Gate::Rz(q, theta) => {
            let m = site_mask(qubits, q);
            let p0 = Complex64::from_polar(1.0, -theta / 2.0);
            let p1 = p0.conj();
            for_each_pair(amps, m, |a0, a1| {
                *a0 *= p0;
                *a1 *= p1;
            });
        }
        Gate::Rzz(a, b, theta) => {
            let mask = site_mask(qubits, a) | site_mask(qubits, b);
            let even = Complex64::from_polar(1.0, -theta / 2.0);
            let odd = even.conj();
            for (idx, amp) in amps.iter_mut().enumerate() {
                if (idx & mask).count_ones().is_multiple_of(2) {
                    *amp *= even;
                } else {
                    *amp *= odd;
                }
            }
        }
    }
}

/// Applies the Hermitian generator `P` of a rotation gate (`X`, `Z` or `Z⊗Z`).
pub(crate) fn apply_generator(amps: &mut [Complex64], qubits: usize, gate: &Gate) {
    match *gate {
        Gate::Hadamard(_) => unreachable!("Hadamard has no generator"),
        Gate::Rx(q, _) => {
            let m = site_mask(qubits, q);
            for_each_pair(amps, m, std::mem::swap);
        }
        Gate::Rz(q, _) => {
            let m = site_mask(qubits, q);
            for_each_pair(amps, m, |_, a1| *a1 = -*a1);
        }
        Gate::Rzz(a, b, _) => {
            let mask = site_mask(qubits, a) | site_mask(qubits, b);
            for (idx, amp) in amps.iter_mut().enumerate() {
                if (idx & mask).count_ones() % 2 == 1 {
                    *amp = -*amp;
                }
            }
        }
    }
}

#[inline]
fn for_each_pair<F: FnMut(&mut Complex64, &mut Complex64)>(amps: &mut [Complex64], m: usize, mut f: F) {
    for block in amps.chunks_mut(2 * m) {
        let (lo, hi) = block.split_at_mut(m);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a0, a1);
        }
    }
}

/// Binding of a parametrized gate to a named parameter: angle = sign · θ[param].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub param: usize,
    pub sign: f64,
}

/// Ordered gate list with a parameter-slot table.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
    slots: Vec<Option<ParamSlot>>,
    param_names: Vec<String>,
}

impl Circuit {
    pub fn new(qubits: usize, param_names: Vec<String>) -> Self {
        Self {
            qubits,
            gates: Vec::new(),
            slots: Vec::new(),
            param_names,
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.push_slot(gate, None)
    }

    /// Appends a rotation whose angle is `sign · params[param]`.
    pub fn push_param(&mut self, gate: Gate, param: usize, sign: f64) -> Result<()> {
        if gate.angle().is_none() {
            return Err(Error::InvalidParameter(format!(
                "{} cannot carry a parameter",
                gate.name()
            )));
        }
        if param >= self.param_names.len() {
            return Err(Error::InvalidParameter(format!("unknown parameter index {param}")));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!("slot sign must be ±1, got {sign}")));
        }
        self.push_slot(gate, Some(ParamSlot { param, sign }))
    }

    fn push_slot(&mut self, gate: Gate, slot: Option<ParamSlot>) -> Result<()> {
        for site in gate.sites() {
            if site == 0 || site > self.qubits {
                return Err(Error::SiteOutOfRange {
                    index: site,
                    length: self.qubits,
                });
            }
        }
        self.gates.push(gate);
        self.slots.push(slot);
        Ok(())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn slots(&self) -> &[Option<ParamSlot>] {
        &self.slots
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn num_params(&self) -> usize {
        self.param_names.len()
    }

    /// Rewrites every parametrized angle from `params`.
    pub fn bind(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_names.len() {
            return Err(Error::ParameterCount {
                expected: self.param_names.len(),
                found: params.len(),
            });
        }
        for (gate, slot) in self.gates.iter_mut().zip(&self.slots) {
            if let Some(s) = slot {
                *gate = gate.with_angle(s.sign * params[s.param]);
            }
        }
        Ok(())
    }

    /// Number of gate occurrences bound to each named parameter.
    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.param_names.len()];
        for s in self.slots.iter().flatten() {
            counts[s.param] += 1;
        }
        counts
    }

    pub fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::zero(self.qubits)?;
        for gate in &self.gates {
            apply_unchecked(&mut state.amplitudes, self.qubits, gate);
        }
        Ok(state)
    }

    /// Runs the circuit with gate `index` replaced by `gate`.
    pub(crate) fn run_with_override(&self, index: usize, gate: Gate) -> Result<StateVector> {
        let mut state = StateVector::zero(self.qubits)?;
        for (k, g) in self.gates.iter().enumerate() {
            let g = if k == index { &gate } else { g };
            apply_unchecked(&mut state.amplitudes, self.qubits, g);
        }
        Ok(state)
    }

    /// One line per gate: kind, targets, parameter name, sign.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (gate, slot) in self.gates.iter().zip(&self.slots) {
            let targets = gate
                .sites()
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let (name, sign) = match slot {
                Some(s) => (
                    self.param_names[s.param].as_str(),
                    if s.sign > 0.0 { "+1" } else { "-1" },
                ),
                None => ("-", "-"),
            };
            out.push_str(&format!("{} {} {} {}\n", gate.name(), targets, name, sign));
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    flip: usize,
    phase_mask: usize,
    y_count: u32,
    coefficient: f64,
}

/// An observable lowered to bit masks for repeated evaluation on one register size.
#[derive(Debug, Clone)]
pub struct CompiledObservable {
    qubits: usize,
    offset: f64,
    diagonal: Vec<f64>,
    off_diagonal: Vec<CompiledTerm>,
}

impl CompiledObservable {
    pub fn new(observable: &Observable) -> Result<Self> {
        let qubits = observable.length();
        if qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                qubits,
                cap: MAX_QUBITS,
            });
        }
        let mut diagonal_terms = Vec::new();
        let mut off_diagonal = Vec::new();
        for term in observable.terms() {
            let mut t = CompiledTerm {
                flip: 0,
                phase_mask: 0,
                y_count: 0,
                coefficient: term.coefficient,
            };
            for &(site, p) in term.factors() {
                let m = site_mask(qubits, site);
                match p {
                    Pauli::X => t.flip |= m,
                    Pauli::Z => t.phase_mask |= m,
                    Pauli::Y => {
                        t.flip |= m;
                        t.phase_mask |= m;
                        t.y_count += 1;
                    }
                }
            }
            if t.flip == 0 {
                diagonal_terms.push(t);
            } else {
                off_diagonal.push(t);
            }
        }
        let diagonal = (0..1usize << qubits)
            .map(|b| {
                diagonal_terms
                    .iter()
                    .map(|t| {
                        if (b & t.phase_mask).count_ones() % 2 == 0 {
                            t.coefficient
                        } else {
                            -t.coefficient
                        }
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            qubits,
            offset: observable.offset(),
            diagonal,
            off_diagonal,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.qubits != self.qubits {
            return Err(Error::LengthMismatch {
                expected: state.qubits,
                found: self.qubits,
            });
        }
        self.expectation_raw(&state.amplitudes)
    }

    pub(crate) fn expectation_raw(&self, amps: &[Complex64]) -> Result<f64> {
        let mut re: f64 = self
            .diagonal
            .iter()
            .zip(amps)
            .map(|(d, a)| d * a.norm_sqr())
            .sum();
        let mut im = 0.0;
        for t in &self.off_diagonal {
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, amp) in amps.iter().enumerate() {
                let v = amps[b ^ t.flip].conj() * amp;
                if (b & t.phase_mask).count_ones() % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            let phase = I.powu(t.y_count);
            let contribution = phase * acc * t.coefficient;
            re += contribution.re;
            im += contribution.im;
        }
        if im.abs() > IMAGINARY_TOLERANCE {
            return Err(Error::NumericalIntegrity(format!(
                "expectation has imaginary residue {im:e}"
            )));
        }
        Ok(re + self.offset)
    }

    /// `out = O·ψ` including the constant offset.
    pub(crate) fn apply_raw(&self, amps: &[Complex64], out: &mut [Complex64]) {
        for ((o, a), d) in out.iter_mut().zip(amps).zip(&self.diagonal) {
            *o = a * (d + self.offset);
        }
        for t in &self.off_diagonal {
            let phase = I.powu(t.y_count) * t.coefficient;
            for (b, amp) in amps.iter().enumerate() {
                let v = amp * phase;
                if (b & t.phase_mask).count_ones() % 2 == 0 {
                    out[b ^ t.flip] += v;
                } else {
                    out[b ^ t.flip] -= v;
                }
            }
        }
    }
}
