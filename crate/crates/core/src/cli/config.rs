//! Declarative run configuration, shared by the command line and batch files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{BoundaryMode, HvaConfig};
use crate::analysis::DEFAULT_FIT_MIN_LENGTH;
use crate::error::{Error, Result};
use crate::model::{IsingChainSpec, RightFieldRule};
use crate::vqe::{SweepDirection, VqeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepExact,
    SweepVqe,
    Scaling,
    GapScan,
    RmsReport,
    DumpCircuit,
    DumpObservable,
    DumpMatrices,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SweepExact => "sweep-exact",
            Experiment::SweepVqe => "sweep-vqe",
            Experiment::Scaling => "scaling",
            Experiment::GapScan => "gap-scan",
            Experiment::RmsReport => "rms-report",
            Experiment::DumpCircuit => "dump-circuit",
            Experiment::DumpObservable => "dump-observable",
            Experiment::DumpMatrices => "dump-matrices",
        }
    }
}

/// Which solver provides exact energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactSource {
    #[default]
    FreeFermion,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Order in which the grid is visited; by default decreasing for VQE
    /// sweeps and as written otherwise.
    pub direction: Option<SweepDirection>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            start: 0.4,
            stop: 1.0,
            points: 10,
            direction: None,
        }
    }
}

impl GridConfig {
    /// Grid values in visiting order.
    pub fn values(&self, default_direction: Option<SweepDirection>) -> Vec<f64> {
        let mut values = crate::analysis::linspace(self.start, self.stop, self.points);
        let wanted = self.direction.or(default_direction);
        let increasing = self.stop > self.start;
        match wanted {
            Some(SweepDirection::Increasing) if !increasing => values.reverse(),
            Some(SweepDirection::Decreasing) if increasing => values.reverse(),
            _ => {}
        }
        values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmsInputs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Column compared in both files.
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub length: usize,
    pub coupling: f64,
    pub transverse_field: f64,
    /// Left field for single-point experiments (the dumps).
    pub left_field: f64,
    pub right_field: RightFieldRule,
    pub grid: GridConfig,
    pub ansatz: HvaConfig,
    pub vqe: VqeConfig,
    /// Master seed; copied into the optimizer and shot sampler.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Finite-shot energy estimates of the optimized states, if set.
    pub shots: Option<usize>,
    pub exact_source: ExactSource,
    /// Chain lengths for `scaling` and `gap-scan`.
    pub lengths: Vec<usize>,
    pub fit_min_length: usize,
    /// Left fields at which `gap-scan` measures the gap.
    pub gap_fields: Vec<f64>,
    pub rms: Option<RmsInputs>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            length: 8,
            coupling: 1.0,
            transverse_field: 0.5,
            left_field: 0.5,
            right_field: RightFieldRule::Opposite,
            grid: GridConfig::default(),
            ansatz: HvaConfig {
                layers: 6,
                boundary_mode: BoundaryMode::Tied,
            },
            vqe: VqeConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            shots: None,
            exact_source: ExactSource::default(),
            lengths: vec![4, 8, 12, 16, 20, 24, 28, 32, 40, 60, 100, 200, 500],
            fit_min_length: DEFAULT_FIT_MIN_LENGTH,
            gap_fields: vec![0.4, 0.9],
            rms: None,
        }
    }
}

/// A batch file: `[[runs]]` tables, each a complete [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchFile {
    pub runs: Vec<RunConfig>,
}

impl BatchFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment
            .ok_or_else(|| Error::Config("no experiment selected".into()))
    }

    /// Chain with the configured `h_l` and the right field given by the rule.
    pub fn chain(&self) -> IsingChainSpec {
        let template = IsingChainSpec {
            length: self.length,
            coupling: self.coupling,
            transverse_field: self.transverse_field,
            left_field: self.left_field,
            right_field: 0.0,
        };
        self.right_field.apply(&template, self.left_field)
    }

    /// The optimizer settings with the master seed applied.
    pub fn seeded_vqe(&self) -> VqeConfig {
        VqeConfig {
            seed: self.seed,
            ..self.vqe
        }
    }

    pub fn validate(&self) -> Result<()> {
        let experiment = self.experiment()?;
        self.chain().validate().map_err(|e| Error::Config(e.to_string()))?;
        let grid_used = matches!(
            experiment,
            Experiment::SweepExact | Experiment::SweepVqe | Experiment::Scaling
        );
        if grid_used {
            let g = &self.grid;
            if !(g.start.is_finite() && g.stop.is_finite()) || g.start == g.stop {
                return Err(Error::Config(format!("degenerate grid [{}, {}]", g.start, g.stop)));
            }
            let min_points = if experiment == Experiment::SweepVqe { 1 } else { 4 };
            if g.points < min_points.max(2) {
                return Err(Error::Config(format!("grid needs at least {} points", min_points.max(2))));
            }
        }
        if matches!(experiment, Experiment::SweepVqe | Experiment::DumpCircuit) {
            HvaConfig::new(self.ansatz.layers, self.ansatz.boundary_mode).map_err(|e| Error::Config(e.to_string()))?;
            self.vqe.validate()?;
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shot count must be positive".into()));
        }
        match experiment {
            Experiment::Scaling if self.lengths.len() < 3 => {
                return Err(Error::Config("scaling needs at least 3 chain lengths".into()))
            }
            Experiment::Scaling if self.lengths.iter().filter(|&&l| l >= self.fit_min_length).count() < 2 => {
                return Err(Error::Config(format!(
                    "scaling needs at least 2 chain lengths >= fit_min_length = {}",
                    self.fit_min_length
                )))
            }
            Experiment::GapScan if self.lengths.len() < 4 => {
                return Err(Error::Config("gap-scan needs at least 4 chain lengths".into()))
            }
            Experiment::GapScan if self.gap_fields.is_empty() => {
                return Err(Error::Config("gap-scan needs at least one left field".into()))
            }
            Experiment::RmsReport if self.rms.is_none() => {
                return Err(Error::Config("rms-report needs two input files".into()))
            }
            _ => {}
        }
        if matches!(experiment, Experiment::Scaling | Experiment::GapScan) && self.lengths.iter().any(|&l| l < 2) {
            return Err(Error::Config("chain lengths must be at least 2".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of everything except the output directory.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Short form of [`Self::hash`] used in directory names.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }

    /// `<output_dir>/<experiment>/<hash>`.
    pub fn run_dir(&self) -> Result<PathBuf> {
        Ok(self.output_dir.join(self.experiment()?.name()).join(self.short_hash()))
    }
}
