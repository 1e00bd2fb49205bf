use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use irs_experiments::config::{Axis, ExperimentConfig, LinkTriple, Metric, Sweep};
use irs_experiments::presets::preset;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-exp"))
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, config: &ExperimentConfig) -> String {
    let path = dir.join(format!("{}.toml", config.name));
    fs::write(&path, config.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

/// Single-point OP config with `n` elements and `b`-bit MPSO.
fn small_point(name: &str, n: usize, bits: u32) -> ExperimentConfig {
    let mut c = preset("fig2a").unwrap();
    c.name = name.into();
    c.methods = vec![format!("mpso-b{bits}")];
    c.scenario.elements = n;
    c.scenario.bits = bits;
    c.sweep = Sweep {
        axis: Axis::SnrTxDb,
        values: vec![73.0],
    };
    c.monte_carlo.samples = 20_000;
    c
}

#[test]
fn overhead_prints_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["overhead", "--preset", "table2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for pct in ["98.44", "99.22", "99.48", "99.61", "99.69"] {
        assert!(stdout.contains(pct), "{stdout}");
    }
    let csv = fs::read_to_string(dir.path().join("overhead.csv")).unwrap();
    assert!(csv.starts_with("# irs-experiments schema=1 kind=overhead"));
}

#[test]
fn sweep_reruns_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = preset("fig4a").unwrap();
    c.sweep.values = vec![2.0, 4.0];
    c.methods = vec!["mpso-b2".into(), "zero-phase".into(), "instantaneous-greedy-b1".into()];
    c.optimizer.particles = 20;
    c.optimizer.iterations = 10;
    let config = write_config(dir.path(), &c);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "2", "1"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = run(&[
            "sweep", "--config", &config, "--out", out_dir.to_str().unwrap(), "--mc-samples", "3000", "--seed", "9",
            "--jobs", jobs,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read_to_string(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = &outputs[0];
    assert!(text.lines().next().unwrap().contains("seed=9"));
    assert_eq!(text.lines().nth(1).unwrap(), "axis_value,method,analytic_metric,mc_metric,mc_stderr,status");
    assert_eq!(text.lines().count(), 2 + 6);
}

#[test]
fn validate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let args = ["validate", "--preset", "fig1", "--out", out_dir, "--mc-samples", "5000", "--seed", "3"];
    assert_eq!(code(&run(&args)), 0);
    let first = fs::read(dir.path().join("validate_cdf.csv")).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(first, fs::read(dir.path().join("validate_cdf.csv")).unwrap());
    let header = String::from_utf8(first).unwrap();
    assert!(header.lines().nth(1).unwrap().starts_with("elements,method,snr_db,empirical_cdf,gamma_cdf"));
}

#[test]
fn single_sample_validation_flags_low_sample_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["validate", "--preset", "fig1", "--out", dir.path().to_str().unwrap(), "--mc-samples", "1"]);
    assert!([0, 3].contains(&code(&out)));
    let ks = fs::read_to_string(dir.path().join("validate_ks.csv")).unwrap();
    let mut rows = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(ks.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let ks_col = headers.iter().position(|h| h == "ks").unwrap();
    let warn_col = headers.iter().position(|h| h == "low_sample_warning").unwrap();
    for row in rows.records() {
        let row = row.unwrap();
        let d: f64 = row[ks_col].parse().unwrap();
        assert!((0.0..=1.0).contains(&d));
        assert_eq!(&row[warn_col], "true");
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = run(&["overhead", "--preset", "table2", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("file"));
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(code(&run(&["sweep", "--preset", "fig9"])), 2);
    assert_eq!(code(&run(&["sweep"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = 3").unwrap();
    assert_eq!(code(&run(&["sweep", "--config", path.to_str().unwrap()])), 2);
    let mut c = preset("fig2b").unwrap();
    c.methods = vec!["annealing".into()];
    fs::write(&path, toml::to_string(&c).unwrap()).unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("annealing"));
    assert_eq!(code(&run(&["overhead", "--config", "/nonexistent/irs.toml"])), 4);
}

#[test]
fn optimize_matches_exhaustive_search_and_round_trips_phases() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_point("n4b2", 4, 2);
    let config = write_config(dir.path(), &c);
    let out_dir = dir.path().join("opt");
    let out = run(&["optimize", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!([0, 3].contains(&code(&out)), "{}", String::from_utf8_lossy(&out.stderr));
    let report: toml::Table = fs::read_to_string(out_dir.join("report.toml")).unwrap().parse().unwrap();
    let gap = report["brute_force_relative_gap"].as_float().unwrap();
    assert!(gap <= 0.005, "gap {gap}");
    let value = report["objective_value"].as_float().unwrap();
    assert_eq!(report["phase_independent"].as_bool(), Some(false));
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + c.optimizer.iterations);

    let phase_file = out_dir.join("phases.toml");
    let mut fixed = c.clone();
    fixed.name = "fixed".into();
    fixed.methods = vec![format!("fixed:{}", phase_file.display())];
    let config = write_config(dir.path(), &fixed);
    let sweep_dir = dir.path().join("sweep");
    let out = run(&["sweep", "--config", &config, "--out", sweep_dir.to_str().unwrap()]);
    assert!([0, 3].contains(&code(&out)));
    let csv = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    let row = csv.lines().nth(2).unwrap();
    let analytic: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((analytic - value).abs() <= 1e-12 * value.abs(), "{analytic} vs {value}");
}

#[test]
fn rayleigh_optimization_is_reported_phase_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_point("rayleigh", 6, 2);
    c.scenario.rice = LinkTriple {
        sd: 0.0,
        sr: 0.0,
        rd: 0.0,
    };
    c.metric = Metric::Rate;
    c.optimizer.particles = 20;
    c.optimizer.iterations = 15;
    let config = write_config(dir.path(), &c);
    let out = run(&["optimize", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: toml::Table = fs::read_to_string(dir.path().join("report.toml")).unwrap().parse().unwrap();
    assert_eq!(report["phase_independent"].as_bool(), Some(true));
    assert!(String::from_utf8(out.stdout).unwrap().contains("phase-independent"));
}

#[test]
fn show_config_reflects_overrides() {
    let out = run(&["show-config", "--preset", "fig3b", "--seed", "42", "--mc-samples", "77"]);
    assert_eq!(code(&out), 0);
    let c = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!((c.monte_carlo.seed, c.monte_carlo.samples), (42, 77));
    assert_eq!(c.scenario.antennas, 2);
}
