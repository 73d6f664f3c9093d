use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tfim-boundary"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// The single run directory `<outdir>/<experiment>/<hash>`.
fn run_dir(outdir: &Path, experiment: &str) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(outdir.join(experiment))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let index = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[index].to_string()).collect()
}

const VQE_ARGS: [&str; 17] = [
    "sweep-vqe", "--L", "4", "--layers", "6", "--hx", "0.5", "--tie-boundary", "--h-start", "1.0", "--h-stop", "0.4",
    "--points", "10", "--seed", "7", "--outdir",
];

#[test]
fn vqe_sweep_writes_reproducible_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let mut args = VQE_ARGS.to_vec();
        args.push(out.to_str().unwrap());
        let output = run(&args);
        assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    }
    let (da, db) = (run_dir(&a, "sweep-vqe"), run_dir(&b, "sweep-vqe"));
    assert_eq!(da.file_name(), db.file_name());

    let m = manifest(&da);
    assert_eq!(m["status"], "success");
    assert_eq!(m["seed"], 7);
    assert!(m["config_hash"].as_str().unwrap().starts_with(da.file_name().unwrap().to_str().unwrap()));
    for f in m["files"].as_array().unwrap() {
        assert!(da.join(f.as_str().unwrap()).exists(), "{f}");
    }
    for f in ["data.csv", "trace.csv", "params.json", "derivative2.csv"] {
        assert_eq!(fs::read(da.join(f)).unwrap(), fs::read(db.join(f)).unwrap(), "{f} differs");
    }

    let h: Vec<f64> = column(&da.join("data.csv"), "h_l").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(h.len(), 10);
    assert_eq!(h[0], 1.0);
    assert!(h.windows(2).all(|w| w[1] < w[0]), "VQE sweeps run in decreasing order");
    for e in column(&da.join("data.csv"), "relative_error_vs_exact") {
        assert!(e.parse::<f64>().unwrap() < 1e-4);
    }
}

#[test]
fn exact_sweep_reports_the_critical_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let output = run(&[
        "sweep-exact", "--L", "100", "--hx", "0.5", "--tie-boundary", "--h-start", "0.4", "--h-stop", "1.0", "--points",
        "60", "--outdir", out,
    ]);
    assert_eq!(code(&output), 0);
    let dir = run_dir(tmp.path(), "sweep-exact");
    let cp = &manifest(&dir)["summary"]["critical_point"];
    assert!((cp["argmin_h"].as_f64().unwrap() - 0.69).abs() < 0.02, "{cp}");
    assert_eq!(cp["at_boundary"], false);
    assert_eq!(column(&dir.join("data.csv"), "energy").len(), 60);
    assert!(column(&dir.join("derivative2.csv"), "h").len() > 60 * 40);
}

#[test]
fn rms_report_of_identical_files_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("series.csv");
    fs::write(&csv, "h,energy\n0.1,-1.5\n0.2,-1.75\n").unwrap();
    let out = tmp.path().join("out");
    let output = run(&["rms-report", csv.to_str().unwrap(), csv.to_str().unwrap(), "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 0);
    let dir = run_dir(&out, "rms-report");
    assert_eq!(column(&dir.join("data.csv"), "rms"), vec!["0.0000000000000000e0"]);
    assert_eq!(manifest(&dir)["summary"]["n"], 2);
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    fs::write(&a, "energy\n1\n2\n").unwrap();
    fs::write(&b, "energy\n1\n").unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(code(&run(&["rms-report", a.to_str().unwrap(), b.to_str().unwrap(), "--outdir", o])), 1);
    assert_eq!(
        code(&run(&["rms-report", a.to_str().unwrap(), a.to_str().unwrap(), "--column", "gap", "--outdir", o])),
        1
    );

    let config = tmp.path().join("bad.toml");
    fs::write(&config, "lenght = 4\n").unwrap();
    assert_eq!(code(&run(&["sweep-exact", "--config", config.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["sweep-vqe", "--layers", "0", "--outdir", o])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
}

#[test]
fn failed_points_give_partial_results() {
    // Parallel fields have no anti-parallel gap: every point fails, the file is still written.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let output = run(&["gap-scan", "--hr", "0.5", "--gap-fields", "0.4", "--lengths", "4,6,8,10", "--outdir", out]);
    assert_eq!(code(&output), 2);
    let dir = run_dir(tmp.path(), "gap-scan");
    let m = manifest(&dir);
    assert_eq!(m["status"], "partial-failure");
    assert!(!m["failures"].as_array().unwrap().is_empty());
    assert!(dir.join("data.csv").exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(&config, "length = 6\ntransverse_field = 0.3\nleft_field = 0.8\n").unwrap();
    let out = tmp.path().join("out");
    let output = run(&["dump-observable", "--config", config.to_str().unwrap(), "--L", "3", "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 0);
    let m = manifest(&run_dir(&out, "dump-observable"));
    assert_eq!(m["config"]["length"], 3);
    assert_eq!(m["config"]["transverse_field"], 0.3);
    // 2 ZZ + 3 X + 2 boundary Z terms.
    assert_eq!(m["summary"]["terms"], 7);
}

#[test]
fn batch_runs_each_config() {
    let tmp = tempfile::tempdir().unwrap();
    let batch = tmp.path().join("batch.toml");
    fs::write(
        &batch,
        r#"
        [[runs]]
        experiment = "sweep-exact"
        length = 6
        exact_source = "dense"
        [runs.grid]
        points = 12

        [[runs]]
        experiment = "dump-circuit"
        length = 4
        [runs.ansatz]
        layers = 2
        boundary_mode = "untied"

        [[runs]]
        experiment = "dump-matrices"
        length = 5
        "#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = run(&["batch", batch.to_str().unwrap(), "--workers", "2", "--outdir", out.to_str().unwrap()]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let circuit = fs::read_to_string(run_dir(&out, "dump-circuit").join("circuit.txt")).unwrap();
    // 4 H + 2 layers × (4 RX + 3 RZZ + 2 RZ).
    assert_eq!(circuit.lines().count(), 4 + 2 * 9);
    assert!(circuit.contains("RZ 4 layer2.zr +1"));
    assert_eq!(column(&run_dir(&out, "sweep-exact").join("data.csv"), "energy").len(), 12);
    let matrices = fs::read_to_string(run_dir(&out, "dump-matrices").join("matrices.txt")).unwrap();
    assert_eq!(matrices.lines().count(), 2 * (5 + 2) + 2);
}
