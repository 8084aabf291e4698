use std::f64::consts::LN_2;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path, config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lambda-adapt"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.ini");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.env_remove("LAMBDA_ADAPT_THREADS");
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// (metadata, header, rows) of a CSV artifact.
fn table(dir: &Path, name: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let text = read(dir, name);
    let (first, rest) = text.split_once('\n').unwrap();
    let meta = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
    let mut lines = rest.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (meta, header, rows)
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn simulate_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, header, rows) = table(dir.path(), "trajectory.csv");
    assert_eq!(header, ["t", "re_psi", "im_psi", "p_e", "p_ab"]);
    assert_eq!(meta["converged"], true);
    assert_eq!(column(&rows, 3)[0], 0.0);
    let ledger = json(dir.path(), "ledger.json");
    assert_eq!(ledger["data"]["closes"], true);
    assert_eq!(ledger["meta"]["config_sha256"], meta["config_sha256"]);
    // Γ_a = Γ_b, Δ = 0.1: p_ab(∞) = 4Γ_aΓ_b/((Γ_a+Γ_b)(Γ_a+Γ_b+Δ)) = 20/21
    let p = ledger["data"]["ledger"]["p_ab_infty"].as_f64().unwrap();
    assert!((p - 20.0 / 21.0).abs() < 1e-6, "{p}");
    assert!(
        ledger["data"]["adaptation_residual"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-6
    );
    let entropy = json(dir.path(), "entropy.json");
    assert_eq!(entropy["data"]["finite_time"]["label"], "model-extension");
    assert!(entropy["data"]["asymptotic"]["s_e"].as_f64().unwrap() > 0.0);
    assert_eq!(
        std::fs::read_dir(dir.path().join("out")).unwrap().count(),
        3
    );
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg =
        "[system]\ndelta_ab = 2\n[pulse]\nfamily = gaussian\nsigma = 2\n[mixture]\np_a0 = 0.7\n";
    for d in [&a, &b] {
        assert_eq!(
            run(&["simulate", "--seedless"], d.path(), Some(cfg))
                .status
                .code(),
            Some(0)
        );
    }
    for name in ["trajectory.csv", "ledger.json", "entropy.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn invalid_mixture_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate"], dir.path(), Some("[mixture]\np_a0 = 1.5\n"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p_a0"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["simulate"],
        dir.path(),
        Some("[pulse]\nlinewidth = 0.1\n"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("linewidth"));
    let o = run(&["simulate"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let missing = Command::new(env!("CARGO_BIN_EXE_lambda-adapt"))
        .args(["simulate", "--config", "/nonexistent/run.ini"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn coarse_step_fails_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["simulate"],
        dir.path(),
        Some("[grid]\nt_max = 200\ndt = 0.5\n"),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("energy ledger"));
    // the diagnostics are still written
    assert_eq!(json(dir.path(), "ledger.json")["data"]["closes"], false);
}

#[test]
fn off_resonance_has_no_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate"], dir.path(), Some("[pulse]\ndelta_L = 0.5\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "ledger.json")["data"]["applicable"], false);
}

#[test]
fn entropy_curve_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["entropy-curve", "--points", "200"],
        dir.path(),
        Some("[mixture]\np_a0 = 0.5\n"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, header, rows) = table(dir.path(), "entropy_curve.csv");
    assert_eq!(header, ["p_ab_infty", "s_e", "s_e_c"]);
    assert_eq!(meta["entropy_units"], "nats");
    assert_eq!(rows.len(), 200);
    let s_e = column(&rows, 1);
    let s_c = column(&rows, 2);
    assert!(s_c.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!((s_c[199] - LN_2).abs() < 1e-9);
    let peak = s_e.iter().cloned().fold(f64::MIN, f64::max);
    assert!(peak > s_e[0] && peak > s_e[199]);
}

#[test]
fn figure2_alias_and_bits() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["figure2", "--points", "2", "--bits"],
        dir.path(),
        Some("[mixture]\np_a0 = 0.5\n"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (meta, _, rows) = table(dir.path(), "entropy_curve.csv");
    assert_eq!(meta["entropy_units"], "bits");
    assert_eq!(rows.len(), 2);
    assert!((column(&rows, 2)[1] - 1.0).abs() < 1e-9);
}

#[test]
fn linewidth_and_family_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        "[sweep]\nparameter = delta\nlo = 0.001\nhi = 10\npoints = 5\nobjective = w_over_hw\n";
    let o = run(&["sweep"], dir.path(), Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, header, rows) = table(dir.path(), "sweep.csv");
    assert_eq!(header, ["linewidth", "family", "w_over_hw", "error"]);
    for (x, w) in column(&rows, 0).iter().zip(column(&rows, 2)) {
        assert!((w - 4.0 / (2.0 + x)).abs() < 1e-12, "{x}: {w}");
    }

    let o = run(
        &["sweep"],
        dir.path(),
        Some("[sweep]\nparameter = family\n"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, _, rows) = table(dir.path(), "sweep.csv");
    let labels: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(labels, ["exponential", "gaussian", "rectangular"]);

    let o = run(&["sweep"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimizer_finds_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[pulse]\ndelta = 0.002\n[optimize]\ndelta_L = -1.3, 2.9\n";
    let o = run(&["optimize"], dir.path(), Some(cfg));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let best = json(dir.path(), "optimum.json");
    assert_eq!(best["data"]["converged"], true);
    assert!(
        best["data"]["parameters"]["detuning"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-3
    );
    let trace = read(dir.path(), "trace.jsonl");
    let mut lines = trace.lines();
    let head: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(head["meta"]["command"], "optimize");
    assert_eq!(
        lines.count() as u64,
        best["data"]["evaluations"].as_u64().unwrap()
    );
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let base = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_lambda-adapt"))
            .args(["entropy-curve", "--out"])
            .arg(dir.path())
            .env("LAMBDA_ADAPT_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(base("2").status.code(), Some(0));
    assert_eq!(base("zero").status.code(), Some(2));
    assert_eq!(base("0").status.code(), Some(2));
}

#[test]
fn coarse_bath_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["oracle-verify"],
        dir.path(),
        Some("[bath]\nn_modes = 201\n"),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("spacing"), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "verify.json")["data"]["pass"], false);
}

#[test]
fn backward_protocol_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify"],
        dir.path(),
        Some("[pulse]\nprotocol = backward\n"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("leaked probability bound"));
    let checks = json(dir.path(), "verify.json")["data"]["checks"].clone();
    let leak = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "backward_leak")
        .unwrap();
    assert!(leak["value"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn default_verification_misses_only_the_energetics() {
    // With 2001 modes over 40(Γ_a+Γ_b) the band edge leaves the integrated
    // work and heat just above 1e-3 ħω_a; every other check passes.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["oracle-verify"], dir.path(), None);
    assert_eq!(o.status.code(), Some(4));
    let checks = json(dir.path(), "verify.json")["data"]["checks"].clone();
    let failing: Vec<&str> = checks
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["work", "heat"]);
    assert!(stderr(&o).contains("'work'"));
}
