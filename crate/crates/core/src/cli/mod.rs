//! Command-line front end. Each subcommand resolves a [`RunConfig`] (file
//! values first, then flags) and hands it to [`run`].
//!
//! Exit codes: 0 success, 1 configuration error, 2 partial failure,
//! 3 numerical-integrity failure.

mod config;
mod experiments;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{BatchFile, ExactSource, Experiment, GridConfig, RmsInputs, RunConfig};
pub use experiments::{exit_code_for, run, run_batch, RunOutcome, RunStatus};

use crate::ansatz::BoundaryMode;
use crate::error::{Error, Result};
use crate::model::RightFieldRule;
use crate::vqe::SweepDirection;

#[derive(Debug, Parser)]
#[command(name = "tfim-boundary", version, about = "Boundary-field transitions in the transverse-field Ising chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact ground energies over a field grid, with spline derivatives.
    SweepExact(RunArgs),
    /// Warm-started VQE sweep over a field grid.
    SweepVqe(RunArgs),
    /// Second-derivative minimum versus chain length and its 1/L extrapolation.
    Scaling(RunArgs),
    /// Gap versus chain length, classified as exponential or polynomial.
    GapScan(RunArgs),
    /// RMS deviation between one column of two CSV files.
    RmsReport(RmsArgs),
    /// The ansatz circuit, one gate per line.
    DumpCircuit(RunArgs),
    /// The Hamiltonian as Pauli terms (JSON).
    DumpObservable(RunArgs),
    /// The free-fermion A and B matrices and single-particle energies.
    DumpMatrices(RunArgs),
    /// Independent runs from a file of `[[runs]]` tables.
    Batch(BatchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain length.
    #[arg(long = "L")]
    pub length: Option<usize>,
    #[arg(long = "J", allow_hyphen_values = true)]
    pub coupling: Option<f64>,
    /// Transverse field h_x.
    #[arg(long, allow_hyphen_values = true)]
    pub hx: Option<f64>,
    /// Left field for single-point commands.
    #[arg(long, allow_hyphen_values = true)]
    pub hl: Option<f64>,
    /// Hold the right field fixed at this value.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "tie_boundary")]
    pub hr: Option<f64>,
    /// h_r = -h_l, with one shared boundary rotation in the ansatz.
    #[arg(long)]
    pub tie_boundary: bool,
    /// Independent rotation angle for the right boundary.
    #[arg(long)]
    pub untied: bool,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub h_stop: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// increasing | decreasing
    #[arg(long, value_parser = parse_direction)]
    pub direction: Option<SweepDirection>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// Also estimate each optimized energy from this many shots.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub max_iters_first: Option<usize>,
    #[arg(long)]
    pub max_iters_subsequent: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Chain lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub fit_min_length: Option<usize>,
    /// Left fields for gap-scan, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gap_fields: Option<Vec<f64>>,
    /// free-fermion | dense
    #[arg(long, value_parser = parse_source)]
    pub source: Option<ExactSource>,
}

#[derive(Debug, Clone, Args)]
pub struct RmsArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long, default_value = "energy")]
    pub column: String,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Overrides `output_dir` in every run.
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

fn parse_direction(s: &str) -> std::result::Result<SweepDirection, String> {
    match s {
        "increasing" => Ok(SweepDirection::Increasing),
        "decreasing" => Ok(SweepDirection::Decreasing),
        other => Err(format!("unknown direction `{other}`")),
    }
}

fn parse_source(s: &str) -> std::result::Result<ExactSource, String> {
    match s {
        "free-fermion" => Ok(ExactSource::FreeFermion),
        "dense" => Ok(ExactSource::Dense),
        other => Err(format!("unknown source `{other}`")),
    }
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self, experiment: Experiment) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(named) = c.experiment.filter(|&e| e != experiment) {
            log::warn!("config names experiment {}; running {}", named.name(), experiment.name());
        }
        c.experiment = Some(experiment);
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(
            length => length,
            coupling => coupling,
            hx => transverse_field,
            hl => left_field,
            layers => ansatz.layers,
            h_start => grid.start,
            h_stop => grid.stop,
            points => grid.points,
            seed => seed,
            outdir => output_dir,
            max_iters_first => vqe.max_iters_first,
            max_iters_subsequent => vqe.max_iters_subsequent,
            restarts => vqe.restarts,
            lengths => lengths,
            fit_min_length => fit_min_length,
            gap_fields => gap_fields,
            source => exact_source,
        );
        if let Some(d) = self.direction {
            c.grid.direction = Some(d);
        }
        if let Some(s) = self.shots {
            c.shots = Some(s);
        }
        if let Some(h_r) = self.hr {
            c.right_field = RightFieldRule::Fixed(h_r);
            c.ansatz.boundary_mode = BoundaryMode::Untied;
        }
        if self.tie_boundary {
            c.right_field = RightFieldRule::Opposite;
            c.ansatz.boundary_mode = BoundaryMode::Tied;
        }
        if self.untied {
            c.ansatz.boundary_mode = BoundaryMode::Untied;
        }
        Ok(c)
    }
}

impl Command {
    /// Configs to run, in order, and the worker count.
    pub fn resolve(&self) -> Result<(Vec<RunConfig>, usize)> {
        let single = |args: &RunArgs, e| Ok((vec![args.resolve(e)?], 1));
        match self {
            Command::SweepExact(a) => single(a, Experiment::SweepExact),
            Command::SweepVqe(a) => single(a, Experiment::SweepVqe),
            Command::Scaling(a) => single(a, Experiment::Scaling),
            Command::GapScan(a) => single(a, Experiment::GapScan),
            Command::DumpCircuit(a) => single(a, Experiment::DumpCircuit),
            Command::DumpObservable(a) => single(a, Experiment::DumpObservable),
            Command::DumpMatrices(a) => single(a, Experiment::DumpMatrices),
            Command::RmsReport(a) => {
                let mut c = RunConfig {
                    experiment: Some(Experiment::RmsReport),
                    rms: Some(RmsInputs {
                        first: a.first.clone(),
                        second: a.second.clone(),
                        column: a.column.clone(),
                    }),
                    ..RunConfig::default()
                };
                if let Some(dir) = &a.outdir {
                    c.output_dir = dir.clone();
                }
                Ok((vec![c], 1))
            }
            Command::Batch(a) => {
                let mut runs = BatchFile::load(&a.file)?.runs;
                for (k, r) in runs.iter_mut().enumerate() {
                    if r.experiment.is_none() {
                        return Err(Error::Config(format!("batch run {k} names no experiment")));
                    }
                    if let Some(dir) = &a.outdir {
                        r.output_dir = dir.clone();
                    }
                }
                Ok((runs, a.workers))
            }
        }
    }
}

/// Parses `args`, runs everything, prints one line per run, and returns the
/// process exit code (the worst over all runs).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (configs, workers) = match cli.command.resolve() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    // Validate everything before running anything.
    for c in &configs {
        if let Err(e) = c.validate() {
            eprintln!("error: {e}");
            return 1;
        }
    }
    let outcomes = match run_batch(&configs, workers) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let mut code = 0;
    for (config, outcome) in configs.iter().zip(outcomes) {
        let name = config.experiment.map(|e| e.name()).unwrap_or("?");
        match outcome {
            Ok(o) => {
                println!("{name} {:?} {}", o.status, o.dir.display());
                for f in &o.failures {
                    eprintln!("  {f}");
                }
                code = code.max(o.status.exit_code());
            }
            Err(e) => {
                eprintln!("{name} error: {e}");
                code = code.max(exit_code_for(&e));
            }
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("tfim-boundary").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn flags_build_a_config() {
        let Command::SweepVqe(args) = parse(&[
            "sweep-vqe", "--L", "4", "--layers", "6", "--hx", "0.5", "--tie-boundary", "--h-start", "1.0",
            "--h-stop", "0.4", "--points", "10", "--seed", "7",
        ]) else {
            panic!("wrong subcommand")
        };
        let c = args.resolve(Experiment::SweepVqe).unwrap();
        assert_eq!((c.length, c.ansatz.layers, c.seed, c.grid.points), (4, 6, 7, 10));
        assert_eq!(c.right_field, RightFieldRule::Opposite);
        assert_eq!(c.grid.values(Some(SweepDirection::Decreasing))[0], 1.0);
        c.validate().unwrap();
    }

    #[test]
    fn negative_fixed_field_selects_untied_ansatz() {
        let Command::SweepExact(args) = parse(&["sweep-exact", "--hr", "-0.3", "--lengths", "4,20,100"]) else {
            panic!("wrong subcommand")
        };
        let c = args.resolve(Experiment::SweepExact).unwrap();
        assert_eq!(c.right_field, RightFieldRule::Fixed(-0.3));
        assert_eq!(c.ansatz.boundary_mode, BoundaryMode::Untied);
        assert_eq!(c.lengths, vec![4, 20, 100]);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "length = 6\nseed = 3\n[grid]\npoints = 12\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            seed: Some(9),
            ..RunArgs::default()
        };
        let c = args.resolve(Experiment::SweepExact).unwrap();
        assert_eq!((c.length, c.seed, c.grid.points), (6, 9, 12));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(["tfim-boundary", "sweep-exact", "--L", "x"]), 1);
        assert_eq!(main_with_args(["tfim-boundary", "sweep-exact", "--points", "2"]), 1);
        assert_eq!(main_with_args(["tfim-boundary", "--help"]), 0);
    }
}
