//! Brute-force exact diagonalization in the full `2^L` Hilbert space.
//!
//! The matrices here are assembled directly from bit patterns (site `i` is
//! bit `L - i`, bit 0 ↔ `Z = +1`), independently of the statevector kernels,
//! so they serve as a reference for both the simulator and the free-fermion
//! solution.

use crate::error::{Error, Result};
use crate::linalg::{lanczos_lowest, symmetric_eigen, LanczosOptions, SquareMatrix};
use crate::model::IsingChainSpec;

/// Largest chain for which the full spectrum is computed densely.
pub const FULL_SPECTRUM_MAX_SITES: usize = 12;

/// Largest chain accepted by the Lanczos low-spectrum oracle.
pub const LOW_SPECTRUM_MAX_SITES: usize = 14;

/// Below this dimension Lanczos is skipped in favour of full diagonalization.
const SMALL_DIM: usize = 64;

/// Real symmetric Hamiltonian in the computational basis: a diagonal plus
/// products of `X` operators (each a bit-flip mask with a real weight).
#[derive(Debug, Clone)]
pub struct ExplicitHamiltonian {
    sites: usize,
    diagonal: Vec<f64>,
    flips: Vec<(usize, f64)>,
}

impl ExplicitHamiltonian {
    /// `-J Σ ZZ - h_x Σ X + h_l Z_1 + h_r Z_L`.
    pub fn ising_chain(spec: &IsingChainSpec) -> Result<Self> {
        spec.validate()?;
        let l = spec.length;
        if l > LOW_SPECTRUM_MAX_SITES {
            return Err(Error::Capacity {
                qubits: l,
                cap: LOW_SPECTRUM_MAX_SITES,
            });
        }
        let spin = |b: usize, site: usize| -> f64 {
            if (b >> (l - site)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let diagonal = (0..1usize << l)
            .map(|b| {
                let bond: f64 = (1..l).map(|i| spin(b, i) * spin(b, i + 1)).sum();
                -spec.coupling * bond + spec.left_field * spin(b, 1) + spec.right_field * spin(b, l)
            })
            .collect();
        let flips = (1..=l)
            .filter(|_| spec.transverse_field != 0.0)
            .map(|site| (1usize << (l - site), -spec.transverse_field))
            .collect();
        Ok(Self {
            sites: l,
            diagonal,
            flips,
        })
    }

    /// The extended chain with ancilla spins 0 and L+1, in the axis-rotated
    /// frame: `-J Σ X_i X_{i+1} - g Σ_{1..L} Z_i - |h_l| X_0 X_1 - |h_r| X_L X_{L+1}`.
    /// Register position `k` (0..=L+1) is bit `L+1-k`.
    pub fn effective_chain(length: usize, coupling: f64, g: f64, hl_abs: f64, hr_abs: f64) -> Result<Self> {
        let n = length + 2;
        if n > LOW_SPECTRUM_MAX_SITES {
            return Err(Error::Capacity {
                qubits: n,
                cap: LOW_SPECTRUM_MAX_SITES,
            });
        }
        let bit = |k: usize| 1usize << (n - 1 - k);
        let diagonal = (0..1usize << n)
            .map(|b| {
                (1..=length)
                    .map(|k| if b & bit(k) == 0 { -g } else { g })
                    .sum()
            })
            .collect();
        let mut flips = vec![(bit(0) | bit(1), -hl_abs), (bit(length) | bit(length + 1), -hr_abs)];
        for k in 1..length {
            flips.push((bit(k) | bit(k + 1), -coupling));
        }
        flips.retain(|&(_, c)| c != 0.0);
        Ok(Self {
            sites: n,
            diagonal,
            flips,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi = d * xi;
        }
        for &(mask, c) in &self.flips {
            for (b, yi) in y.iter_mut().enumerate() {
                *yi += c * x[b ^ mask];
            }
        }
    }

    pub fn to_dense(&self) -> SquareMatrix {
        let mut m = SquareMatrix::zeros(self.dim());
        for (b, d) in self.diagonal.iter().enumerate() {
            m.set(b, b, *d);
        }
        for &(mask, c) in &self.flips {
            for b in 0..self.dim() {
                m.add_to(b, b ^ mask, c);
            }
        }
        m
    }

    /// The `count` lowest eigenvalues (with multiplicity), ascending.
    pub fn lowest_levels(&self, count: usize) -> Result<Vec<f64>> {
        Ok(self.lowest_pairs(count)?.into_iter().map(|(e, _)| e).collect())
    }

    /// The `count` lowest eigenpairs via deflated Lanczos (dense for tiny dimensions).
    pub fn lowest_pairs(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let count = count.min(self.dim());
        if self.dim() <= SMALL_DIM {
            let eig = symmetric_eigen(&self.to_dense(), true)?;
            return Ok((0..count)
                .map(|k| (eig.values[k], eig.vector(k).expect("vectors requested")))
                .collect());
        }
        let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
        for k in 0..count {
            let deflate: Vec<Vec<f64>> = found.iter().map(|(_, v)| v.clone()).collect();
            let options = LanczosOptions {
                seed: 0x5eed + k as u64,
                ..LanczosOptions::default()
            };
            let pair = lanczos_lowest(self.dim(), |x, y| self.apply(x, y), &deflate, options)?;
            found.push(pair);
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(found)
    }
}

/// Complete spectrum of a small chain plus its ground vector.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Real ground-state amplitudes in the statevector basis ordering.
    pub ground_vector: Vec<f64>,
}

impl DenseSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

/// Full diagonalization of the chain Hamiltonian.
pub fn dense_ed(spec: &IsingChainSpec) -> Result<DenseSpectrum> {
    if spec.length > FULL_SPECTRUM_MAX_SITES {
        return Err(Error::Capacity {
            qubits: spec.length,
            cap: FULL_SPECTRUM_MAX_SITES,
        });
    }
    let h = ExplicitHamiltonian::ising_chain(spec)?;
    let eig = symmetric_eigen(&h.to_dense(), h.dim() <= 256)?;
    let ground_vector = match eig.vector(0) {
        Some(v) => v,
        None => h.lowest_pairs(1)?.remove(0).1,
    };
    Ok(DenseSpectrum {
        eigenvalues: eig.values,
        ground_vector,
    })
}

/// Ground energy of the chain (Lanczos above tiny sizes), up to 14 sites.
pub fn exact_ground_energy(spec: &IsingChainSpec) -> Result<f64> {
    Ok(ExplicitHamiltonian::ising_chain(spec)?.lowest_levels(1)?[0])
}

/// `E₁ - E₀` of the chain, up to 14 sites.
pub fn exact_gap(spec: &IsingChainSpec) -> Result<f64> {
    let levels = ExplicitHamiltonian::ising_chain(spec)?.lowest_levels(2)?;
    Ok(levels[1] - levels[0])
}
