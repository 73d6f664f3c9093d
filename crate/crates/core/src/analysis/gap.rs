//! Exponential-versus-polynomial classification of gap decay with chain length.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::fit_line;
use crate::error::{Error, Result};
use crate::fermion::sector_gap;
use crate::model::IsingChainSpec;
use crate::report::{format_float, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Exponential,
    Polynomial,
}

/// `Δ_L ≈ prefactor · e^{-rate·L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub prefactor: f64,
    /// Sum of squared residuals of `ln Δ`.
    pub residual: f64,
}

/// `Δ_L ≈ prefactor · L^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFitResult {
    pub gaps: Vec<(usize, f64)>,
    pub exponential: ExponentialFit,
    pub polynomial: PolynomialFit,
    pub preferred: DecayModel,
}

impl GapFitResult {
    /// Columns: L, gap.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rows = self.gaps.iter().map(|&(l, g)| vec![l.to_string(), format_float(g)]);
        write_csv(writer, &["L", "gap"], rows)
    }
}

/// Least-squares fits of `ln Δ` against `L` and against `ln L`; the model with
/// the smaller residual wins (both have two parameters).
pub fn classify_gap_decay(gaps: &[(usize, f64)]) -> Result<GapFitResult> {
    if gaps.len() < 4 {
        return Err(Error::InsufficientData(format!("gap classification needs at least 4 sizes, got {}", gaps.len())));
    }
    if let Some(&(l, g)) = gaps.iter().find(|(l, g)| !(*g > 0.0 && g.is_finite()) || *l == 0) {
        return Err(Error::InvalidInput(format!("gap at L={l} is {g}; gaps must be positive")));
    }
    let log_gap: Vec<f64> = gaps.iter().map(|&(_, g)| g.ln()).collect();
    let lengths: Vec<f64> = gaps.iter().map(|&(l, _)| l as f64).collect();
    let log_lengths: Vec<f64> = lengths.iter().map(|l| l.ln()).collect();
    let exp_line = fit_line(&lengths, &log_gap)?;
    let poly_line = fit_line(&log_lengths, &log_gap)?;
    let exponential = ExponentialFit {
        rate: -exp_line.slope,
        prefactor: exp_line.intercept.exp(),
        residual: exp_line.residual,
    };
    let polynomial = PolynomialFit {
        exponent: -poly_line.slope,
        prefactor: poly_line.intercept.exp(),
        residual: poly_line.residual,
    };
    let preferred = if exponential.residual <= polynomial.residual {
        DecayModel::Exponential
    } else {
        DecayModel::Polynomial
    };
    Ok(GapFitResult {
        gaps: gaps.to_vec(),
        exponential,
        polynomial,
        preferred,
    })
}

/// `Δ_L` for each length (dense cross-check up to the oracle cap).
pub fn gap_series(template: &IsingChainSpec, lengths: &[usize]) -> Result<Vec<(usize, f64)>> {
    lengths
        .iter()
        .map(|&length| Ok((length, sector_gap(&IsingChainSpec { length, ..*template })?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const LENGTHS: [usize; 7] = [8, 12, 16, 20, 30, 40, 60];

    #[test]
    fn pure_exponential() {
        let gaps: Vec<(usize, f64)> = LENGTHS.iter().map(|&l| (l, (-0.5 * l as f64).exp())).collect();
        let fit = classify_gap_decay(&gaps).unwrap();
        assert_eq!(fit.preferred, DecayModel::Exponential);
        assert_abs_diff_eq!(fit.exponential.rate, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.exponential.prefactor, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn pure_power_law() {
        let gaps: Vec<(usize, f64)> = LENGTHS.iter().map(|&l| (l, 1.0 / (l * l) as f64)).collect();
        let fit = classify_gap_decay(&gaps).unwrap();
        assert_eq!(fit.preferred, DecayModel::Polynomial);
        assert_abs_diff_eq!(fit.polynomial.exponent, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn invalid_input() {
        assert!(classify_gap_decay(&[(4, 1.0), (8, 0.5), (12, 0.2)]).is_err());
        assert!(classify_gap_decay(&[(4, 1.0), (8, 0.5), (12, 0.0), (16, 0.1)]).is_err());
        assert!(classify_gap_decay(&[(4, 1.0), (8, -0.5), (12, 0.2), (16, 0.1)]).is_err());
    }

    proptest! {
        #[test]
        fn scaling_the_gaps_changes_only_prefactors(
            rate in 0.05f64..1.0,
            noise in proptest::collection::vec(-0.2f64..0.2, 7),
            scale in 1e-3f64..1e3,
        ) {
            let gaps: Vec<(usize, f64)> = LENGTHS
                .iter()
                .zip(&noise)
                .map(|(&l, n)| (l, (-rate * l as f64 + n).exp()))
                .collect();
            let scaled: Vec<(usize, f64)> = gaps.iter().map(|&(l, g)| (l, g * scale)).collect();
            let (a, b) = (classify_gap_decay(&gaps).unwrap(), classify_gap_decay(&scaled).unwrap());
            prop_assert_eq!(a.preferred, b.preferred);
            prop_assert!((a.exponential.rate - b.exponential.rate).abs() < 1e-9);
            prop_assert!((a.polynomial.exponent - b.polynomial.exponent).abs() < 1e-9);
            prop_assert!((b.exponential.prefactor / a.exponential.prefactor / scale - 1.0).abs() < 1e-9);
            prop_assert!(a.exponential.residual >= 0.0 && a.polynomial.residual >= 0.0);
        }
    }
}
