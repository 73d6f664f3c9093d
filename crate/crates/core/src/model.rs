//! The boundary-field Ising chain and its Pauli-string observables.
//!
//! Sites are 1-based throughout the public interface. The Hamiltonian is
//!
//! ```text
//! H = -J Σ_{i<L} Z_i Z_{i+1} - h_x Σ_i X_i + h_l Z_1 + h_r Z_L
//! ```
//!
//! and the kink counter is `N_k = ½ Σ_{i<L} (1 - Z_i Z_{i+1})`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the open chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingChainSpec {
    pub length: usize,
    pub coupling: f64,
    pub transverse_field: f64,
    pub left_field: f64,
    pub right_field: f64,
}

impl IsingChainSpec {
    pub fn new(
        length: usize,
        coupling: f64,
        transverse_field: f64,
        left_field: f64,
        right_field: f64,
    ) -> Result<Self> {
        let spec = Self {
            length,
            coupling,
            transverse_field,
            left_field,
            right_field,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Anti-parallel boundary fields of equal magnitude, `h_r = -h_l`, with `J = 1`.
    pub fn tied(length: usize, transverse_field: f64, left_field: f64) -> Result<Self> {
        Self::new(length, 1.0, transverse_field, left_field, -left_field)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidSize(self.length));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::InvalidCoupling(self.coupling));
        }
        for (name, v) in [
            ("h_x", self.transverse_field),
            ("h_l", self.left_field),
            ("h_r", self.right_field),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        Ok(())
    }

    /// `0 < h_x < 1` and `h_l·h_r < 0`.
    pub fn is_physical_regime(&self) -> bool {
        self.transverse_field > 0.0
            && self.transverse_field < 1.0
            && self.left_field * self.right_field < 0.0
    }

    pub fn with_left_field(self, left_field: f64) -> Self {
        Self { left_field, ..self }
    }

    pub fn with_fields(self, left_field: f64, right_field: f64) -> Self {
        Self {
            left_field,
            right_field,
            ..self
        }
    }

    /// Asymptotic magnet-to-kink critical field `sqrt(1 - h_x)` (in units of `J`).
    pub fn critical_boundary_field(&self) -> f64 {
        (1.0 - self.transverse_field / self.coupling).sqrt() * self.coupling
    }
}

/// How the right boundary field follows the swept left field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "value")]
pub enum RightFieldRule {
    /// `h_r = -h_l`.
    Opposite,
    /// `h_r` held at a constant.
    Fixed(f64),
}

impl RightFieldRule {
    pub fn right_field(&self, left_field: f64) -> f64 {
        match *self {
            RightFieldRule::Opposite => -left_field,
            RightFieldRule::Fixed(v) => v,
        }
    }

    /// `template` with `h_l = left_field` and `h_r` set by the rule.
    pub fn apply(&self, template: &IsingChainSpec, left_field: f64) -> IsingChainSpec {
        template.with_fields(left_field, self.right_field(left_field))
    }
}

/// Single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(c)
    }
}

/// A weighted tensor product of single-site Paulis. Factors are kept sorted
/// by site with no repeated site; the identity string has no factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: f64,
    factors: Vec<(usize, Pauli)>,
    length: usize,
}

impl PauliString {
    pub fn new(coefficient: f64, length: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut sorted: Vec<(usize, Pauli)> = factors.to_vec();
        sorted.sort_by_key(|&(site, _)| site);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "site {} appears twice in a Pauli string",
                    w[0].0
                )));
            }
        }
        for &(site, _) in &sorted {
            if site == 0 || site > length {
                return Err(Error::SiteOutOfRange {
                    index: site,
                    length,
                });
            }
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coefficient {coefficient} is not finite"
            )));
        }
        Ok(Self {
            coefficient,
            factors: sorted,
            length,
        })
    }

    pub fn identity(coefficient: f64, length: usize) -> Self {
        Self {
            coefficient,
            factors: Vec::new(),
            length,
        }
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// True when every factor is `kind` (vacuously true for the identity).
    pub fn is_uniform(&self, kind: Pauli) -> bool {
        self.factors.iter().all(|&(_, p)| p == kind)
    }

    pub fn label(&self) -> String {
        if self.factors.is_empty() {
            return "I".to_string();
        }
        self.factors
            .iter()
            .map(|(site, p)| format!("{p}{site}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}·{}", self.coefficient, self.label())
    }
}

/// Real linear combination of Pauli strings on a fixed number of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    length: usize,
    terms: Vec<PauliString>,
    #[serde(rename = "offset")]
    constant_offset: f64,
}

impl Observable {
    /// Builds an observable, merging strings with equal factor maps and
    /// dropping terms whose (merged) coefficient is exactly zero.
    pub fn new(length: usize, terms: Vec<PauliString>, constant_offset: f64) -> Result<Self> {
        let mut constant_offset = constant_offset;
        let mut merged: Vec<PauliString> = Vec::with_capacity(terms.len());
        for term in terms {
            if term.length != length {
                return Err(Error::LengthMismatch {
                    expected: length,
                    found: term.length,
                });
            }
            if term.is_identity() {
                constant_offset += term.coefficient;
                continue;
            }
            match merged.iter_mut().find(|t| t.factors == term.factors) {
                Some(existing) => existing.coefficient += term.coefficient,
                None => merged.push(term),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        Ok(Self {
            length,
            terms: merged,
            constant_offset,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.constant_offset
    }

    /// Sum of the absolute values of all term coefficients (offset excluded).
    pub fn coefficient_one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Term-wise sum; both observables must act on the same number of sites.
    pub fn add(&self, other: &Observable) -> Result<Observable> {
        if self.length != other.length {
            return Err(Error::LengthMismatch {
                expected: self.length,
                found: other.length,
            });
        }
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Observable::new(
            self.length,
            terms,
            self.constant_offset + other.constant_offset,
        )
    }

    pub fn scaled(&self, factor: f64) -> Observable {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliString {
                coefficient: t.coefficient * factor,
                ..t.clone()
            })
            .collect();
        Observable::new(self.length, terms, self.constant_offset * factor)
            .expect("scaling preserves term lengths")
    }

    /// Coefficient of the string with exactly these factors, or 0 if absent.
    pub fn coefficient_of(&self, factors: &[(usize, Pauli)]) -> f64 {
        let mut key = factors.to_vec();
        key.sort_by_key(|&(s, _)| s);
        self.terms
            .iter()
            .find(|t| t.factors == key)
            .map_or(0.0, |t| t.coefficient)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Observable = serde_json::from_str(text)?;
        // Re-run construction so merged/validated invariants hold for external input.
        let terms = raw
            .terms
            .iter()
            .map(|t| PauliString::new(t.coefficient, raw.length, &t.factors))
            .collect::<Result<Vec<_>>>()?;
        Observable::new(raw.length, terms, raw.constant_offset)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.constant_offset)?;
        for t in &self.terms {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

pub fn build_hamiltonian(spec: &IsingChainSpec) -> Result<Observable> {
    spec.validate()?;
    let l = spec.length;
    let mut terms = Vec::with_capacity(2 * l + 1);
    for i in 1..l {
        terms.push(PauliString::new(
            -spec.coupling,
            l,
            &[(i, Pauli::Z), (i + 1, Pauli::Z)],
        )?);
    }
    for i in 1..=l {
        terms.push(PauliString::new(-spec.transverse_field, l, &[(i, Pauli::X)])?);
    }
    terms.push(PauliString::new(spec.left_field, l, &[(1, Pauli::Z)])?);
    terms.push(PauliString::new(spec.right_field, l, &[(l, Pauli::Z)])?);
    Observable::new(l, terms, 0.0)
}

pub fn build_kink_operator(length: usize) -> Result<Observable> {
    if length < 2 {
        return Err(Error::InvalidSize(length));
    }
    let terms = (1..length)
        .map(|i| PauliString::new(-0.5, length, &[(i, Pauli::Z), (i + 1, Pauli::Z)]))
        .collect::<Result<Vec<_>>>()?;
    Observable::new(length, terms, (length - 1) as f64 / 2.0)
}

pub fn build_local_magnetization(site: usize, length: usize) -> Result<Observable> {
    if site == 0 || site > length {
        return Err(Error::SiteOutOfRange {
            index: site,
            length,
        });
    }
    Observable::new(
        length,
        vec![PauliString::new(1.0, length, &[(site, Pauli::Z)])?],
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zz(i: usize) -> [(usize, Pauli); 2] {
        [(i, Pauli::Z), (i + 1, Pauli::Z)]
    }

    #[test]
    fn hamiltonian_two_sites() {
        let spec = IsingChainSpec::new(2, 1.0, 0.5, 0.3, -0.3).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        assert_eq!(h.terms().len(), 5);
        assert_eq!(h.coefficient_of(&zz(1)), -1.0);
        assert_eq!(h.coefficient_of(&[(1, Pauli::X)]), -0.5);
        assert_eq!(h.coefficient_of(&[(2, Pauli::X)]), -0.5);
        assert_eq!(h.coefficient_of(&[(1, Pauli::Z)]), 0.3);
        assert_eq!(h.coefficient_of(&[(2, Pauli::Z)]), -0.3);
        assert_eq!(h.offset(), 0.0);
    }

    #[test]
    fn zero_boundary_fields_are_dropped() {
        let spec = IsingChainSpec::new(4, 1.0, 0.5, 0.0, 0.0).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        assert_eq!(h.terms().len(), 7);
        assert!(h.terms().iter().all(|t| t.factors().len() == 2 || t.is_uniform(Pauli::X)));
    }

    #[test]
    fn kink_operator_three_sites() {
        let k = build_kink_operator(3).unwrap();
        assert_eq!(k.offset(), 1.0);
        assert_eq!(k.terms().len(), 2);
        assert_eq!(k.coefficient_of(&zz(1)), -0.5);
        assert_eq!(k.coefficient_of(&zz(2)), -0.5);
        assert!(matches!(build_kink_operator(1), Err(Error::InvalidSize(1))));
    }

    #[test]
    fn magnetization_range() {
        let m = build_local_magnetization(1, 4).unwrap();
        assert_eq!(m.terms().len(), 1);
        assert_eq!(m.coefficient_of(&[(1, Pauli::Z)]), 1.0);
        assert!(build_local_magnetization(0, 4).is_err());
        assert!(build_local_magnetization(5, 4).is_err());
    }

    #[test]
    fn spec_invariants() {
        assert!(IsingChainSpec::new(1, 1.0, 0.5, 0.1, -0.1).is_err());
        assert!(IsingChainSpec::new(3, 0.0, 0.5, 0.1, -0.1).is_err());
        let s = IsingChainSpec::new(3, 1.0, 1.5, 0.1, 0.1).unwrap();
        assert!(!s.is_physical_regime());
        assert!(IsingChainSpec::tied(3, 0.5, 0.7).unwrap().is_physical_regime());
    }

    #[test]
    fn doubling_left_field_touches_only_z1() {
        let a = build_hamiltonian(&IsingChainSpec::new(5, 1.0, 0.4, 0.3, -0.2).unwrap()).unwrap();
        let b = build_hamiltonian(&IsingChainSpec::new(5, 1.0, 0.4, 0.6, -0.2).unwrap()).unwrap();
        assert_eq!(a.terms().len(), b.terms().len());
        for t in a.terms() {
            let other = b.coefficient_of(t.factors());
            if t.factors() == [(1, Pauli::Z)] {
                assert_eq!(other, 2.0 * t.coefficient);
            } else {
                assert_eq!(other, t.coefficient);
            }
        }
    }

    #[test]
    fn summing_merges_duplicates() {
        let h = build_hamiltonian(&IsingChainSpec::tied(4, 0.5, 0.7).unwrap()).unwrap();
        let twice = h.add(&h).unwrap();
        assert_eq!(twice.terms().len(), h.terms().len());
        for t in h.terms() {
            assert_eq!(twice.coefficient_of(t.factors()), 2.0 * t.coefficient);
        }
        let k = build_kink_operator(5).unwrap();
        assert!(matches!(h.add(&k), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn cancelling_terms_vanish() {
        let a = build_local_magnetization(2, 3).unwrap();
        let sum = a.add(&a.scaled(-1.0)).unwrap();
        assert!(sum.terms().is_empty());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let k = build_kink_operator(4).unwrap();
        let back = Observable::from_json(&k.to_json().unwrap()).unwrap();
        assert_eq!(back, k);
        let bad = r#"{"length":2,"terms":[{"coefficient":1.0,"factors":[[3,"Z"]],"length":2}],"offset":0.0}"#;
        assert!(matches!(Observable::from_json(bad), Err(Error::SiteOutOfRange { .. })));
    }
}
