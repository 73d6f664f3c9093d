//! Free-fermion solution of the chain with boundary fields.
//!
//! The chain is embedded in an extended chain with two extra spins (sites 0
//! and L+1) that carry the boundary fields as couplings. After a
//! Jordan-Wigner transformation the extended Hamiltonian is quadratic,
//! `Σ c†Ac + ½(c†Bc† - cBc)`, and its single-particle energies ε_k are the
//! singular values of `A + B`. Site L+1 contributes an exact zero mode
//! (ε₀ = 0), so every level of the extended chain is doubly degenerate across
//! the boundary-spin sectors.
//!
//! The anti-parallel chain is the odd-occupation sector: its ground energy
//! is `E_gs + ε₁` with `E_gs = -½ Σ ε_k`, and its lowest excitation is `ε₂ - ε₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::model::IsingChainSpec;

/// Additive constant between `-½ Σ ε_k` and the ground energy of the
/// extended chain. It vanishes analytically: the `-gL` of the quadratic form
/// cancels the `½ Tr A` produced by normal ordering.
pub const CONSTANT_SHIFT: f64 = 0.0;

/// Below `-NEGATIVE_LIMIT · ‖A+B‖₁` a singular value is treated as a construction bug.
pub const NEGATIVE_LIMIT: f64 = 1e-8;

/// Chains at or below this size take their gap from the dense oracle.
pub const DENSE_GAP_MAX_SITES: usize = exact::LOW_SPECTRUM_MAX_SITES;

/// Parameters of the extended (L+2)-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChainSpec {
    pub length: usize,
    pub g: f64,
    pub hl_abs: f64,
    pub hr_abs: f64,
    pub coupling: f64,
}

impl EffectiveChainSpec {
    pub fn from_chain(spec: &IsingChainSpec) -> Self {
        Self {
            length: spec.length,
            g: spec.transverse_field,
            hl_abs: spec.left_field.abs(),
            hr_abs: spec.right_field.abs(),
            coupling: spec.coupling,
        }
    }

    pub fn sites(&self) -> usize {
        self.length + 2
    }
}

/// The hopping (`A`, symmetric) and pairing (`B`, antisymmetric) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionMatrices {
    pub a: SquareMatrix,
    pub b: SquareMatrix,
}

impl FermionMatrices {
    /// `A + B`: upper bidiagonal for this chain.
    pub fn sum(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.a.dim(), |i, j| self.a.get(i, j) + self.b.get(i, j))
    }

    pub fn to_text(&self) -> String {
        format!("# A\n{}# B\n{}", self.a.to_text(), self.b.to_text())
    }
}

pub fn build_ab(spec: &EffectiveChainSpec) -> FermionMatrices {
    let n = spec.sites();
    let last = spec.length + 1;
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let bulk = |i: usize| (1.0 - delta(i, 0)) * (1.0 - delta(i, last));
    let bond = |i: usize, j: usize| {
        -spec.coupling * bulk(i) * bulk(j)
            - spec.hl_abs * (delta(i, 0) + delta(j, 0))
            - spec.hr_abs * (delta(i, last) + delta(j, last))
    };
    let a = SquareMatrix::from_fn(n, |i, j| {
        bond(i, j) * (delta(j, i + 1) + delta(i, j + 1)) - 2.0 * spec.g * bulk(i) * delta(i, j)
    });
    let b = SquareMatrix::from_fn(n, |i, j| bond(i, j) * (delta(j, i + 1) - delta(i, j + 1)));
    FermionMatrices { a, b }
}

/// Single-particle energies and the vacuum energy of the extended chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// ε_k ascending, non-negative; `epsilons[0]` is the exact zero mode.
    pub epsilons: Vec<f64>,
    /// `-½ Σ ε_k + constant_shift`.
    pub ground_energy: f64,
    pub constant_shift: f64,
    /// Total magnitude removed by clamping round-off negatives to zero.
    pub clamped: f64,
}

impl SpectrumResult {
    /// Lowest energy with odd mode occupation: the anti-parallel ground state.
    pub fn odd_sector_ground(&self) -> f64 {
        self.ground_energy + self.epsilons[1]
    }

    /// Lowest energy with even mode occupation: the vacuum, which is the
    /// ground state of the chain with parallel boundary fields.
    pub fn even_sector_ground(&self) -> f64 {
        self.ground_energy
    }

    /// First excitation inside the odd sector.
    pub fn odd_sector_gap(&self) -> f64 {
        self.epsilons[2] - self.epsilons[1]
    }
}

/// ε_k from the symmetric Golub-Kahan form `[[0, M], [Mᵀ, 0]]` with
/// `M = A + B`, whose eigenvalues are `±ε_k`. Interleaving rows and columns
/// makes it tridiagonal, and its small eigenvalues keep full absolute
/// accuracy (squaring `M Mᵀ` would lose half the digits of tiny ε).
pub fn single_particle_spectrum(matrices: &FermionMatrices) -> Result<SpectrumResult> {
    let m = matrices.sum();
    let n = m.dim();
    let scale = m.one_norm().max(f64::MIN_POSITIVE);
    let augmented = SquareMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, false) => m.get(i, j - n),
        (false, true) => m.get(j, i - n),
        _ => 0.0,
    });
    // Order: column 0, row 0, column 1, row 1, …
    let perm: Vec<usize> = (0..n).flat_map(|k| [n + k, k]).collect();
    let eig = symmetric_eigen(&augmented.permuted(&perm), false)?;
    let values = eig.values;

    for k in 0..n {
        let pair = values[k] + values[2 * n - 1 - k];
        if pair.abs() > NEGATIVE_LIMIT * scale {
            return Err(Error::NumericalIntegrity(format!(
                "augmented spectrum is not symmetric: λ_{k} + λ_{} = {pair:e}",
                2 * n - 1 - k
            )));
        }
    }
    let mut clamped = 0.0;
    let mut epsilons = Vec::with_capacity(n);
    for &v in values[n..].iter() {
        if v < -NEGATIVE_LIMIT * scale {
            return Err(Error::NumericalIntegrity(format!(
                "single-particle energy {v:e} is negative"
            )));
        }
        if v < 0.0 {
            clamped += -v;
        }
        epsilons.push(v.max(0.0));
    }
    epsilons.sort_by(f64::total_cmp);
    let ground_energy = -0.5 * epsilons.iter().sum::<f64>() + CONSTANT_SHIFT;
    Ok(SpectrumResult {
        epsilons,
        ground_energy,
        constant_shift: CONSTANT_SHIFT,
        clamped,
    })
}

/// Eigenvalues ε_k² of `(A+B)(A-B) = (A+B)(A+B)ᵀ`, ascending, from the
/// symmetric product. Kept as an independent route for cross-checks.
pub fn squared_spectrum(matrices: &FermionMatrices) -> Result<Vec<f64>> {
    let m = matrices.sum();
    let product = m.mul_transpose(&m);
    let scale = product.one_norm().max(f64::MIN_POSITIVE);
    let eig = symmetric_eigen(&product, false)?;
    eig.values
        .into_iter()
        .map(|v| {
            if v < -NEGATIVE_LIMIT * scale {
                Err(Error::NumericalIntegrity(format!("ε² = {v:e} is negative")))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

pub fn spectrum_for(spec: &IsingChainSpec) -> Result<SpectrumResult> {
    spec.validate()?;
    single_particle_spectrum(&build_ab(&EffectiveChainSpec::from_chain(spec)))
}

fn require_anti_parallel(spec: &IsingChainSpec, allow_zero: bool) -> Result<()> {
    let product = spec.left_field * spec.right_field;
    if product > 0.0 || (!allow_zero && product == 0.0) {
        return Err(Error::UnsupportedSector {
            h_l: spec.left_field,
            h_r: spec.right_field,
        });
    }
    Ok(())
}

/// Ground energy of the chain with anti-parallel boundary fields (a vanishing
/// field is accepted: the two boundary sectors are then degenerate).
pub fn sector_ground_energy(spec: &IsingChainSpec) -> Result<f64> {
    require_anti_parallel(spec, true)?;
    Ok(spectrum_for(spec)?.odd_sector_ground())
}

/// Ground energy for boundary fields of either relative sign: the odd sector
/// when they are anti-parallel (or one vanishes), the even sector when parallel.
pub fn ground_energy(spec: &IsingChainSpec) -> Result<f64> {
    let spectrum = spectrum_for(spec)?;
    if spec.left_field * spec.right_field > 0.0 {
        Ok(spectrum.even_sector_ground())
    } else {
        Ok(spectrum.odd_sector_ground())
    }
}

/// `E₁ - E₀` of the chain from the free-fermion spectrum.
pub fn free_fermion_gap(spec: &IsingChainSpec) -> Result<f64> {
    require_anti_parallel(spec, false)?;
    Ok(spectrum_for(spec)?.odd_sector_gap().max(0.0))
}

/// `E₁ - E₀` of the chain. Up to [`DENSE_GAP_MAX_SITES`] the value comes from
/// the dense oracle and must agree with the free-fermion gap.
pub fn sector_gap(spec: &IsingChainSpec) -> Result<f64> {
    let free = free_fermion_gap(spec)?;
    if spec.length > DENSE_GAP_MAX_SITES {
        return Ok(free);
    }
    let dense = exact::exact_gap(spec)?;
    let tolerance = 1e-8 * (1.0 + spec.length as f64);
    if (dense - free).abs() > tolerance {
        return Err(Error::NumericalIntegrity(format!(
            "free-fermion gap {free:e} disagrees with dense gap {dense:e}"
        )));
    }
    Ok(dense.max(0.0))
}

/// Best available exact ground energy: the dense oracle up to
/// [`exact::LOW_SPECTRUM_MAX_SITES`], the free-fermion solution beyond.
pub fn reference_ground_energy(spec: &IsingChainSpec) -> Result<f64> {
    if spec.length <= exact::LOW_SPECTRUM_MAX_SITES {
        exact::exact_ground_energy(spec)
    } else {
        ground_energy(spec)
    }
}

/// Difference between the dense ground energy and `-½ Σ ε + ε₁` for one small
/// chain; zero when [`CONSTANT_SHIFT`] is right.
pub fn calibrate_constant_shift(spec: &IsingChainSpec) -> Result<f64> {
    require_anti_parallel(spec, true)?;
    let spectrum = spectrum_for(spec)?;
    let uncorrected = spectrum.odd_sector_ground() - spectrum.constant_shift;
    Ok(exact::exact_ground_energy(spec)? - uncorrected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExplicitHamiltonian;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eff(length: usize, g: f64, hl: f64, hr: f64) -> EffectiveChainSpec {
        EffectiveChainSpec {
            length,
            g,
            hl_abs: hl,
            hr_abs: hr,
            coupling: 1.0,
        }
    }

    /// All occupation-number energies `E_gs + Σ n_k ε_k`, ascending.
    fn many_body_levels(s: &SpectrumResult) -> Vec<f64> {
        let n = s.epsilons.len();
        let mut levels: Vec<f64> = (0..1usize << n)
            .map(|mask| {
                s.ground_energy
                    + (0..n).filter(|k| mask >> k & 1 == 1).map(|k| s.epsilons[k]).sum::<f64>()
            })
            .collect();
        levels.sort_by(f64::total_cmp);
        levels
    }

    #[test]
    fn matrices_for_two_sites() {
        let m = build_ab(&eff(2, 0.5, 0.3, 0.3));
        let diag: Vec<f64> = (0..4).map(|i| m.a.get(i, i)).collect();
        assert_eq!(diag, vec![0.0, -1.0, -1.0, 0.0]);
        let off: Vec<f64> = (0..3).map(|i| m.a.get(i, i + 1)).collect();
        assert_eq!(off, vec![-0.3, -1.0, -0.3]);
        assert_eq!(m.a.bandwidth(), 1);
        let b_off: Vec<f64> = (0..3).map(|i| m.b.get(i, i + 1)).collect();
        assert_eq!(b_off, vec![-0.3, -1.0, -0.3]);
    }

    #[test]
    fn symmetry_of_a_and_antisymmetry_of_b() {
        let m = build_ab(&eff(7, 0.37, 1.2, 0.05));
        let n = m.a.dim();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.a.get(i, j), m.a.get(j, i));
                assert_eq!(m.b.get(i, j), -m.b.get(j, i));
            }
        }
    }

    #[test]
    fn free_left_boundary_decouples() {
        let m = build_ab(&eff(5, 0.5, 0.0, 0.8));
        for k in 0..7 {
            assert_eq!(m.a.get(0, k), 0.0);
            assert_eq!(m.b.get(k, 0), 0.0);
        }
        let s = single_particle_spectrum(&m).unwrap();
        assert!(s.epsilons[0].abs() < 1e-14);
        assert!(s.epsilons[1].abs() < 1e-14);
        assert!(s.epsilons[2] > 0.1);
    }

    #[test]
    fn extended_chain_levels_match_dense_oracle() {
        for (l, g, hl, hr) in [(2, 0.5, 0.3, 0.3), (3, 0.7, 0.2, 1.1), (4, 0.25, 0.9, 0.6)] {
            let s = single_particle_spectrum(&build_ab(&eff(l, g, hl, hr))).unwrap();
            let h = ExplicitHamiltonian::effective_chain(l, 1.0, g, hl, hr).unwrap();
            let dense = symmetric_eigen(&h.to_dense(), false).unwrap().values;
            for (a, b) in many_body_levels(&s).iter().zip(&dense) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn classical_limit_matches_enumeration() {
        // g = 0: enumerate classical configurations of the extended chain.
        let (l, hl, hr) = (4, 0.35, 0.8);
        let s = single_particle_spectrum(&build_ab(&eff(l, 0.0, hl, hr))).unwrap();
        let n = l + 2;
        let mut classical: Vec<f64> = (0..1usize << n)
            .map(|cfg| {
                let x = |k: usize| if cfg >> k & 1 == 0 { 1.0 } else { -1.0 };
                let bulk: f64 = (1..l).map(|k| x(k) * x(k + 1)).sum();
                -bulk - hl * x(0) * x(1) - hr * x(l) * x(l + 1)
            })
            .collect();
        classical.sort_by(f64::total_cmp);
        for (a, b) in many_body_levels(&s).iter().zip(&classical) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let mut expected = vec![0.0, 2.0 * hl, 2.0 * hr];
        expected.extend(std::iter::repeat_n(2.0, l - 1));
        expected.sort_by(f64::total_cmp);
        for (a, b) in s.epsilons.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn squared_route_agrees() {
        let m = build_ab(&eff(30, 0.5, 0.71, 0.71));
        let s = single_particle_spectrum(&m).unwrap();
        let sq = squared_spectrum(&m).unwrap();
        for (e, e2) in s.epsilons.iter().zip(&sq) {
            assert_abs_diff_eq!(e * e, *e2, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_depends_on_field_magnitudes_only() {
        let a = spectrum_for(&IsingChainSpec::new(9, 1.0, 0.4, 0.6, -0.2).unwrap()).unwrap();
        let b = spectrum_for(&IsingChainSpec::new(9, 1.0, 0.4, -0.6, 0.2).unwrap()).unwrap();
        assert_eq!(a.epsilons, b.epsilons);
        let e1 = sector_ground_energy(&IsingChainSpec::tied(9, 0.5, 0.8).unwrap()).unwrap();
        let e2 = sector_ground_energy(&IsingChainSpec::tied(9, 0.5, -0.8).unwrap()).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn sector_ground_energy_matches_dense_oracle() {
        let spec = IsingChainSpec::tied(4, 0.5, 0.71).unwrap();
        let dense = exact::dense_ed(&spec).unwrap().ground_energy();
        assert_abs_diff_eq!(sector_ground_energy(&spec).unwrap(), dense, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let l = rng.gen_range(2..=10);
            let hx = rng.gen_range(0.05..0.95);
            let hl: f64 = rng.gen_range(0.01..1.5);
            let hr: f64 = -rng.gen_range(0.01..1.5);
            let spec = IsingChainSpec::new(l, 1.0, hx, hl, hr).unwrap();
            assert_abs_diff_eq!(calibrate_constant_shift(&spec).unwrap(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn parallel_fields_use_the_even_sector() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let l = rng.gen_range(2..=9);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let hl = sign * rng.gen_range(0.01..1.5);
            let hr = sign * rng.gen_range(0.01..1.5);
            let spec = IsingChainSpec::new(l, 1.0, rng.gen_range(0.05..0.95), hl, hr).unwrap();
            let exact = exact::exact_ground_energy(&spec).unwrap();
            assert_abs_diff_eq!(ground_energy(&spec).unwrap(), exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn ground_energy_is_continuous_through_zero_field() {
        let spec = IsingChainSpec::new(12, 1.0, 0.8, 0.0, -0.3).unwrap();
        let at = |h: f64| ground_energy(&spec.with_left_field(h)).unwrap();
        let slope_left = (at(0.0) - at(-1e-6)) / 1e-6;
        let slope_right = (at(1e-6) - at(0.0)) / 1e-6;
        assert_abs_diff_eq!(slope_left, slope_right, epsilon = 1e-4);
    }

    #[test]
    fn parallel_fields_are_rejected() {
        let spec = IsingChainSpec::new(6, 1.0, 0.5, 0.3, 0.4).unwrap();
        assert!(matches!(sector_ground_energy(&spec), Err(Error::UnsupportedSector { .. })));
        assert!(matches!(sector_gap(&spec), Err(Error::UnsupportedSector { .. })));
    }

    #[test]
    fn gaps_match_dense_oracle() {
        for (l, h) in [(4, 0.4), (4, 0.9), (6, 0.71), (8, 0.4), (10, 0.9)] {
            let spec = IsingChainSpec::tied(l, 0.5, h).unwrap();
            let dense = exact::exact_gap(&spec).unwrap();
            assert_abs_diff_eq!(free_fermion_gap(&spec).unwrap(), dense, epsilon = 1e-9);
            assert_abs_diff_eq!(sector_gap(&spec).unwrap(), dense, epsilon = 1e-9);
        }
        let spec = IsingChainSpec::new(7, 1.0, 0.8, 0.5, -0.3).unwrap();
        assert_abs_diff_eq!(free_fermion_gap(&spec).unwrap(), exact::exact_gap(&spec).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn large_chains_are_cheap() {
        let s = spectrum_for(&IsingChainSpec::tied(500, 0.5, 0.71).unwrap()).unwrap();
        assert_eq!(s.epsilons.len(), 502);
        assert!(s.epsilons[0].abs() < 1e-14);
        assert!(s.clamped < 1e-10);
    }
}
