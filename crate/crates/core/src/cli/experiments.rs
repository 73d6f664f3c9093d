//! Experiment drivers: each writes its artifacts into the run directory and
//! reports a status; `run` adds the manifest and log.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExactSource, Experiment, RunConfig};
use crate::analysis::{
    classify_gap_decay, finite_size_scaling, free_fermion_scaling_series, rms_labeled, spline_derivative,
    find_second_derivative_minimum, CriticalPoint, CurveMeta, CurveSource, EnergyCurve,
};
use crate::ansatz::{build_circuit, run_ansatz, ParamRecord};
use crate::error::{Error, Result};
use crate::exact::{exact_gap, exact_ground_energy};
use crate::fermion::{build_ab, free_fermion_gap, ground_energy, spectrum_for, EffectiveChainSpec};
use crate::model::{build_hamiltonian, IsingChainSpec};
use crate::report::{format_float, format_optional, write_csv};
use crate::statevector::SHOT_RNG_NAME;
use crate::vqe::{random_initial_params, sweep, SweepDirection};

/// Tolerance for cross-checks between independent exact solvers.
const CROSS_CHECK_TOLERANCE: f64 = 1e-8;
/// Largest chain cross-checked against dense diagonalization.
const CROSS_CHECK_MAX_LENGTH: usize = 12;
/// Slack allowed below the exact ground energy before a VQE energy counts
/// as a variational-bound violation.
const VARIATIONAL_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Success,
    PartialFailure,
    IntegrityFailure,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::PartialFailure => 2,
            RunStatus::IntegrityFailure => 3,
        }
    }
}

/// Exit code for a run that could not complete.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::InvalidParameter(_)
        | Error::InvalidSize(_)
        | Error::InvalidCoupling(_)
        | Error::SeriesMismatch(..)
        | Error::ParameterCount { .. } => 1,
        Error::NumericalIntegrity(_) => 3,
        _ => 2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub failures: Vec<String>,
    pub summary: Value,
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    files: Vec<String>,
    failures: Vec<String>,
    integrity: Vec<String>,
    log: Vec<String>,
}

impl Run<'_> {
    fn note(&mut self, message: String) {
        log::info!("{message}");
        self.log.push(message);
    }

    fn fail(&mut self, message: String) {
        log::warn!("{message}");
        self.log.push(format!("FAILED: {message}"));
        self.failures.push(message);
    }

    fn violate(&mut self, message: String) {
        log::error!("{message}");
        self.log.push(format!("INTEGRITY: {message}"));
        self.integrity.push(message);
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.files.push(name.to_string());
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    fn status(&self) -> RunStatus {
        if !self.integrity.is_empty() {
            RunStatus::IntegrityFailure
        } else if !self.failures.is_empty() {
            RunStatus::PartialFailure
        } else {
            RunStatus::Success
        }
    }
}

/// Validates `config`, runs the experiment and writes
/// `<output_dir>/<experiment>/<hash>/` with data files, `manifest.json` and `run.log`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let experiment = config.experiment()?;
    let dir = config.run_dir()?;
    fs::create_dir_all(&dir)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut run = Run {
        config,
        dir: dir.clone(),
        files: Vec::new(),
        failures: Vec::new(),
        integrity: Vec::new(),
        log: Vec::new(),
    };
    run.note(format!("{} config {} seed {}", experiment.name(), config.hash(), config.seed));
    let summary = match experiment {
        Experiment::SweepExact => sweep_exact(&mut run)?,
        Experiment::SweepVqe => sweep_vqe(&mut run)?,
        Experiment::Scaling => scaling(&mut run)?,
        Experiment::GapScan => gap_scan(&mut run)?,
        Experiment::RmsReport => rms_report(&mut run)?,
        Experiment::DumpCircuit => dump_circuit(&mut run)?,
        Experiment::DumpObservable => dump_observable(&mut run)?,
        Experiment::DumpMatrices => dump_matrices(&mut run)?,
    };
    let status = run.status();
    let wall_time = clock.elapsed().as_secs_f64();
    run.note(format!("finished with status {status:?} in {wall_time:.3} s"));

    let mut files = run.files.clone();
    files.push("manifest.json".into());
    files.push("run.log".into());
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "shot_rng": SHOT_RNG_NAME,
        "config": config,
        "status": status,
        "failures": run.failures,
        "integrity_violations": run.integrity,
        "files": files,
        "summary": summary,
        "started_unix_seconds": started,
        "wall_time_seconds": wall_time,
    });
    run.write_json("manifest.json", &manifest)?;
    let mut log_text = run.log.join("\n");
    log_text.push('\n');
    fs::write(dir.join("run.log"), log_text)?;
    Ok(RunOutcome {
        status,
        dir,
        files,
        failures: run.failures.clone(),
        summary,
    })
}

/// Runs independent configs concurrently on a pool of `workers` threads.
pub fn run_batch(configs: &[RunConfig], workers: usize) -> Result<Vec<Result<RunOutcome>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| configs.par_iter().map(run).collect()))
}

fn template(config: &RunConfig) -> IsingChainSpec {
    config.chain()
}

fn critical_point_json(cp: &CriticalPoint, h_c: f64) -> Value {
    json!({
        "argmin_h": cp.h,
        "second_derivative": cp.second_derivative,
        "at_boundary": cp.at_boundary,
        "h_c_reference": h_c,
    })
}

/// Derivative CSVs and the second-derivative minimum of `curve`.
fn analyse_curve(run: &mut Run, curve: &EnergyCurve) -> Result<Value> {
    if curve.len() < 4 {
        run.fail(format!("only {} usable points; derivatives skipped", curve.len()));
        return Ok(Value::Null);
    }
    for (order, name) in [(1, "derivative1.csv"), (2, "derivative2.csv")] {
        let d = spline_derivative(curve, order)?;
        d.write_csv(run.create(name)?)?;
    }
    let cp = find_second_derivative_minimum(curve)?;
    if cp.at_boundary {
        run.note(format!("second-derivative minimum at the range edge (h = {}); not trusted", cp.h));
    } else {
        run.note(format!("second-derivative minimum at h = {:.6}", cp.h));
    }
    Ok(critical_point_json(&cp, template(run.config).critical_boundary_field()))
}

fn sweep_exact(run: &mut Run) -> Result<Value> {
    let config = run.config;
    let template = template(config);
    let rule = config.right_field;
    let values = config.grid.values(None);
    let solve = |spec: &IsingChainSpec| match config.exact_source {
        ExactSource::FreeFermion => ground_energy(spec),
        ExactSource::Dense => exact_ground_energy(spec),
    };
    let energies: Vec<Result<f64>> = values.par_iter().map(|&h| solve(&rule.apply(&template, h))).collect();

    if config.exact_source == ExactSource::FreeFermion && template.length <= CROSS_CHECK_MAX_LENGTH {
        let dense: Vec<Result<f64>> = values
            .par_iter()
            .map(|&h| exact_ground_energy(&rule.apply(&template, h)))
            .collect();
        for ((h, e), d) in values.iter().zip(&energies).zip(&dense) {
            if let (Ok(e), Ok(d)) = (e, d) {
                if (e - d).abs() > CROSS_CHECK_TOLERANCE {
                    run.violate(format!("free-fermion and dense energies differ by {:e} at h_l = {h}", e - d));
                }
            }
        }
    }

    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (&h, e) in values.iter().zip(&energies) {
        let h_r = rule.right_field(h);
        match e {
            Ok(e) => {
                pairs.push((h, *e));
                rows.push(vec![
                    format_float(h),
                    format_float(h_r),
                    format_float(*e),
                    format_float(e / template.length as f64),
                ]);
            }
            Err(err) => {
                run.fail(format!("h_l = {h}: {err}"));
                rows.push(vec![format_float(h), format_float(h_r), String::new(), String::new()]);
            }
        }
    }
    write_csv(run.create("data.csv")?, &["h_l", "h_r", "energy", "energy_per_site"], rows)?;

    let source = match config.exact_source {
        ExactSource::FreeFermion => CurveSource::FreeFermion,
        ExactSource::Dense => CurveSource::DenseEd,
    };
    let curve = EnergyCurve::from_pairs(pairs, CurveMeta::new(&template, rule, source))?;
    curve.write_csv(run.create("energy.csv")?)?;
    let critical = analyse_curve(run, &curve)?;
    Ok(json!({ "points": values.len(), "critical_point": critical }))
}

fn sweep_vqe(run: &mut Run) -> Result<Value> {
    let config = run.config;
    let template = template(config);
    let values = config.grid.values(Some(SweepDirection::Decreasing));
    let result = sweep(&template, config.right_field, &values, &config.ansatz, &config.seeded_vqe())?;

    for (k, p) in result.points.iter().enumerate() {
        match (&p.error, &p.result) {
            (Some(err), _) => run.fail(format!("point {k} (h_l = {}): {err}", p.h_l)),
            (None, Some(r)) => run.note(format!(
                "point {k}: h_l = {:.6} E = {:.12} iterations {} {:?}",
                p.h_l, r.energy, r.iterations, r.termination
            )),
            (None, None) => {}
        }
        if let (Some(r), Some(exact)) = (&p.result, p.reference_energy) {
            let lowest = r.iteration_trace.iter().map(|t| t.energy).fold(r.energy, f64::min);
            if lowest < exact - VARIATIONAL_SLACK {
                run.violate(format!(
                    "point {k}: energy {lowest} is below the exact ground energy {exact}"
                ));
            }
        }
    }
    result.write_data_csv(run.create("data.csv")?)?;
    result.write_trace_csv(run.create("trace.csv")?)?;
    result.write_params_json(run.create("params.json")?)?;

    if let Some(shots) = config.shots {
        shot_estimates(run, &result, shots)?;
    }

    let (estimates, references): (Vec<f64>, Vec<f64>) = result
        .points
        .iter()
        .filter_map(|p| Some((p.energy()?, p.reference_energy?)))
        .unzip();
    let rms = if estimates.is_empty() {
        None
    } else {
        Some(rms_labeled(&estimates, &references, "vqe", "exact")?.rms)
    };
    let curve = EnergyCurve::from_pairs(
        result.energy_curve(),
        CurveMeta::new(&template, config.right_field, CurveSource::Vqe),
    );
    let critical = match curve {
        Ok(curve) => analyse_curve(run, &curve)?,
        Err(err) => {
            run.fail(format!("no energy curve: {err}"));
            Value::Null
        }
    };
    Ok(json!({
        "points": result.points.len(),
        "failed_points": result.failures(),
        "converged_points": result.points.iter().filter(|p| p.result.as_ref().is_some_and(|r| r.converged)).count(),
        "max_relative_error": result.max_relative_error(),
        "rms_vs_exact": rms,
        "critical_point": critical,
    }))
}

fn shot_estimates(run: &mut Run, result: &crate::vqe::SweepResult, shots: usize) -> Result<()> {
    let config = run.config;
    let mut rows = Vec::new();
    for (k, p) in result.points.iter().enumerate() {
        let Some(r) = &p.result else { continue };
        let spec = config.right_field.apply(&template(config), p.h_l);
        let hamiltonian = build_hamiltonian(&spec)?;
        let state = run_ansatz(&config.ansatz, spec.length, &r.optimal_params)?;
        let seed = config.seed.wrapping_add(k as u64);
        let estimate = state.sample_expectation(&hamiltonian, shots, seed)?;
        rows.push(vec![
            k.to_string(),
            format_float(p.h_l),
            format_float(r.energy),
            format_float(estimate),
            seed.to_string(),
        ]);
    }
    run.note(format!("{} shot estimates at {shots} shots ({SHOT_RNG_NAME})", rows.len()));
    write_csv(
        run.create("shots.csv")?,
        &["point_index", "h_l", "energy", "shot_estimate", "shot_seed"],
        rows,
    )
}

fn scaling(run: &mut Run) -> Result<Value> {
    let config = run.config;
    let (lo, hi) = (config.grid.start.min(config.grid.stop), config.grid.start.max(config.grid.stop));
    let series = free_fermion_scaling_series(
        &template(config),
        config.right_field,
        &config.lengths,
        lo,
        hi,
        config.grid.points,
    )?;
    for e in series.entries.iter().filter(|e| e.at_boundary) {
        run.fail(format!("L = {}: second-derivative minimum at the range edge", e.length));
    }
    let report = finite_size_scaling(&series, config.fit_min_length)?;
    run.note(format!(
        "intercept {:.6} (h_c {:.6}), receding steps {:?}",
        report.intercept, series.h_c, report.receding_steps
    ));
    series.write_csv(run.create("data.csv")?)?;
    run.write_json("report.json", &report)?;
    Ok(json!({
        "intercept": report.intercept,
        "h_c_reference": series.h_c,
        "deviation": report.deviation,
        "non_monotone": report.non_monotone,
        "receding_steps": report.receding_steps,
    }))
}

fn gap_scan(run: &mut Run) -> Result<Value> {
    let config = run.config;
    let template = template(config);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &h_l in &config.gap_fields {
        let spec = config.right_field.apply(&template, h_l);
        let gaps: Vec<(usize, Result<f64>, Option<Result<f64>>)> = config
            .lengths
            .par_iter()
            .map(|&length| {
                let chain = IsingChainSpec { length, ..spec };
                let dense = (length <= 14).then(|| exact_gap(&chain));
                (length, free_fermion_gap(&chain), dense)
            })
            .collect();
        let mut usable = Vec::new();
        for (length, gap, dense) in gaps {
            let dense = match dense {
                Some(Ok(d)) => Some(d),
                Some(Err(err)) => {
                    run.fail(format!("h_l = {h_l}, L = {length}: dense gap: {err}"));
                    None
                }
                None => None,
            };
            match gap {
                Ok(g) => {
                    if let Some(d) = dense {
                        if (g - d).abs() > CROSS_CHECK_TOLERANCE {
                            run.violate(format!("h_l = {h_l}, L = {length}: gaps differ by {:e}", g - d));
                        }
                    }
                    usable.push((length, g));
                    rows.push(vec![
                        format_float(h_l),
                        format_float(spec.right_field),
                        length.to_string(),
                        format_float(g),
                        format_optional(dense),
                    ]);
                }
                Err(err) => run.fail(format!("h_l = {h_l}, L = {length}: {err}")),
            }
        }
        match classify_gap_decay(&usable) {
            Ok(fit) => {
                run.note(format!("h_l = {h_l}: {:?} decay preferred", fit.preferred));
                fits.push(json!({ "h_l": h_l, "h_r": spec.right_field, "fit": fit }));
            }
            Err(err) => run.fail(format!("h_l = {h_l}: {err}")),
        }
    }
    write_csv(run.create("data.csv")?, &["h_l", "h_r", "L", "gap", "dense_gap"], rows)?;
    run.write_json("fits.json", &fits)?;
    Ok(json!({ "fits": fits }))
}

fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let index = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| bad(format!("no column `{column}`")))?;
    reader
        .records()
        .enumerate()
        .map(|(row, record)| {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let field = record.get(index).unwrap_or("");
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: `{field}` is not a number", row + 1)))
        })
        .collect()
}

fn rms_report(run: &mut Run) -> Result<Value> {
    let inputs = run.config.rms.as_ref().expect("validated");
    let first = read_column(&inputs.first, &inputs.column)?;
    let second = read_column(&inputs.second, &inputs.column)?;
    let report = rms_labeled(
        &first,
        &second,
        &inputs.first.display().to_string(),
        &inputs.second.display().to_string(),
    )?;
    run.note(format!("rms = {} over {} points", report.rms, report.n));
    write_csv(
        run.create("data.csv")?,
        &["rms", "n"],
        [vec![format_float(report.rms), report.n.to_string()]],
    )?;
    Ok(serde_json::to_value(&report)?)
}

fn dump_circuit(run: &mut Run) -> Result<Value> {
    let config = run.config;
    let spec = template(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = random_initial_params(&config.ansatz, &config.seeded_vqe(), &mut rng);
    let circuit = build_circuit(&config.ansatz, spec.length, &params)?;
    run.write_text("circuit.txt", &circuit.render_text())?;
    run.write_json("params.json", &ParamRecord::new(&config.ansatz, &spec, &params)?)?;
    Ok(json!({ "gates": circuit.gates().len(), "parameters": circuit.num_params() }))
}

fn dump_observable(run: &mut Run) -> Result<Value> {
    let hamiltonian = build_hamiltonian(&template(run.config))?;
    let mut text = hamiltonian.to_json()?;
    text.push('\n');
    run.write_text("observable.json", &text)?;
    Ok(json!({
        "terms": hamiltonian.terms().len(),
        "coefficient_one_norm": hamiltonian.coefficient_one_norm(),
    }))
}

fn dump_matrices(run: &mut Run) -> Result<Value> {
    let spec = template(run.config);
    let matrices = build_ab(&EffectiveChainSpec::from_chain(&spec));
    run.write_text("matrices.txt", &matrices.to_text())?;
    let spectrum = spectrum_for(&spec)?;
    let rows = spectrum
        .epsilons
        .iter()
        .enumerate()
        .map(|(k, e)| vec![k.to_string(), format_float(*e)]);
    write_csv(run.create("spectrum.csv")?, &["k", "epsilon"], rows)?;
    Ok(json!({ "dimension": matrices.a.dim(), "ground_energy": ground_energy(&spec)? }))
}
