use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapstat"))
        .args(args)
        .env_remove("GAPSTAT_THREADS")
        .output()
        .expect("spawn gapstat")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "gapstat {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pm1() -> &'static str {
    static PATH: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    PATH.get_or_init(|| s(&data("dna_pm1.txt")).to_owned())
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

#[test]
fn align_matches_golden_file() {
    let out = run(&[
        "align",
        "--x",
        s(&data("x.fa")),
        "--y",
        s(&data("y.fa")),
        "--scores",
        pm1(),
        "--gap",
        "affine:2,1",
        "--global",
    ]);
    assert!(out.status.success());
    let golden = std::fs::read(data("golden_align.json")).unwrap();
    assert_eq!(out.stdout, golden);
}

#[test]
fn align_single_letters_scores_the_pair() {
    let v = ok_json(&[
        "align",
        "--x",
        s(&data("one_x.fa")),
        "--y",
        s(&data("one_y.fa")),
        "--scores",
        pm1(),
        "--gap",
        "log:0,2",
    ]);
    assert_eq!(v["H"], 1.0);
    assert_eq!(v["zstar_len"], 1);
    assert_eq!(v["zstar"], serde_json::json!([[1, 1]]));
}

#[test]
fn infinite_gap_equals_gapless_score() {
    let v = ok_json(&[
        "align",
        "--x",
        s(&data("x.fa")),
        "--y",
        s(&data("y.fa")),
        "--scores",
        pm1(),
        "--gap",
        "inf",
    ]);
    assert_eq!(v["H"], v["Hinf"]);
    // Longest common run of the two inputs is TGCAAC.
    assert_eq!(v["H"], 6.0);
}

#[test]
fn malformed_gap_spec_is_a_usage_error() {
    let (x, y) = (data("x.fa"), data("y.fa"));
    let args = ["align", "--x", s(&x), "--y", s(&y), "--scores", pm1()];
    for spec in ["affine:2", "cubic:1,2", "log:a,b", "affine:-1,2"] {
        let mut a = args.to_vec();
        a.extend(["--gap", spec]);
        assert_eq!(code(&a), 2, "{spec}");
    }
}

#[test]
fn missing_input_file_is_a_data_error() {
    let c = code(&[
        "align",
        "--x",
        s(&data("missing.fa")),
        "--y",
        s(&data("y.fa")),
        "--scores",
        pm1(),
        "--gap",
        "inf",
    ]);
    assert_eq!(c, 1);
}

#[test]
fn table_gap_reads_file() {
    let spec = format!("table:{},affine/1", s(&data("gap_table.txt")));
    let v = ok_json(&["align", "--x", s(&data("x.fa")), "--y", s(&data("y.fa")), "--scores", pm1(), "--gap", &spec]);
    // g(1) = 3 in the table, so the single-gap alignment scores 9 - 3.
    assert_eq!(v["H"], 6.0);
}

// ---------------------------------------------------------------------------
// testgap
// ---------------------------------------------------------------------------

fn verdict(gap: &str) -> Value {
    ok_json(&["testgap", "--scores", pm1(), "--gap", gap])
}

#[test]
fn testgap_log_above_threshold() {
    let v = verdict("log:0,2");
    assert_eq!(v["verdict"], "LogarithmicForLargeDelta");
    assert!((v["theta_star"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
    assert!((v["inv_theta_star"].as_f64().unwrap() - 1.0 / 3f64.ln()).abs() < 1e-12);
}

#[test]
fn testgap_log_below_threshold() {
    assert_eq!(verdict("log:0,0.5")["verdict"], "LinearForAllDelta");
}

#[test]
fn testgap_affine() {
    assert_eq!(verdict("affine:2,1")["verdict"], "LogarithmicForLargeDelta");
}

// ---------------------------------------------------------------------------
// theta
// ---------------------------------------------------------------------------

#[test]
fn theta_reference_model_bracket() {
    let v = ok_json(&["theta", "--scores", pm1(), "--gap", "affine:8,2"]);
    let ts = 3f64.ln();
    let b = &v["report"]["per_kappa"][0]["bracket"];
    let lower = b["lower"].as_f64().unwrap();
    let upper = b["upper"].as_f64().unwrap();
    assert!(lower < upper && lower > 1.09);
    assert!((upper - ts).abs() < 1e-9);
    let root = &v["roots"][0];
    assert_eq!(root["kappa"], 1);
    assert!((root["theta"].as_f64().unwrap() - lower).abs() < 1e-12);
    assert_eq!(v["seed"], 1);
}

#[test]
fn theta_gapless_collapses_to_theta_star() {
    let v = ok_json(&["theta", "--scores", pm1(), "--gap", "inf"]);
    let ts = 3f64.ln();
    let b = &v["report"]["bracket"];
    assert!((b["lower"].as_f64().unwrap() - ts).abs() < 1e-9);
    assert!((b["upper"].as_f64().unwrap() - ts).abs() < 1e-9);
    let rates = &v["growth_constants"]["score_rate"];
    assert!((rates[0].as_f64().unwrap() - 2.0 / ts).abs() < 1e-6);
}

#[test]
fn theta_linear_domain_exits_no_root() {
    let out = run(&["theta", "--scores", pm1(), "--gap", "log:8,0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

// ---------------------------------------------------------------------------
// tail
// ---------------------------------------------------------------------------

fn tail(extra: &[&str]) -> Output {
    let mut a = vec!["tail", "--scores", pm1(), "--gap", "affine:8,2"];
    a.extend_from_slice(extra);
    run(&a)
}

#[test]
fn tail_bound_from_root_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("root.json");
    let out = run(&["theta", "--scores", pm1(), "--gap", "affine:8,2", "--out", s(&root)]);
    assert!(out.status.success());
    let out = tail(&["--c", "20", "--m", "100", "--n", "100", "--method", "bound", "--root", s(&root)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let theta = v["theta"].as_f64().unwrap();
    let expect = 1e4 * (-theta * 20.0).exp();
    assert!((v["bound"].as_f64().unwrap() - expect).abs() <= 1e-12 * expect);
    assert_eq!(v["method"], "bound_only");
}

#[test]
fn tail_bound_rejects_unverified_theta() {
    let out = tail(&["--c", "10", "--m", "32", "--n", "32", "--method", "bound", "--theta", "0.9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = tail(&["--c", "10", "--m", "32", "--n", "32", "--method", "bound"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tail_mc_trivial_thresholds() {
    let v: Value =
        serde_json::from_slice(&tail(&["--c", "-1", "--m", "8", "--n", "8", "--samples", "200"]).stdout).unwrap();
    assert_eq!(v["p_hat"], 1.0);
    let v: Value =
        serde_json::from_slice(&tail(&["--c", "9", "--m", "8", "--n", "8", "--samples", "200"]).stdout).unwrap();
    assert_eq!(v["p_hat"], 0.0);
    assert_eq!(v["N"], 200);
    assert_eq!(v["seed"], 1);
}

#[test]
fn tail_is_agrees_with_mc_on_small_case() {
    let mc: Value = serde_json::from_slice(
        &tail(&["--c", "4", "--m", "8", "--n", "8", "--method", "mc", "--samples", "50000", "--seed", "3"]).stdout,
    )
    .unwrap();
    let is: Value = serde_json::from_slice(
        &tail(&["--c", "4", "--m", "8", "--n", "8", "--method", "is", "--samples", "200000", "--seed", "4"]).stdout,
    )
    .unwrap();
    let (p1, s1) = (mc["p_hat"].as_f64().unwrap(), mc["se"].as_f64().unwrap());
    let (p2, s2) = (is["p_hat"].as_f64().unwrap(), is["se"].as_f64().unwrap());
    assert!((p1 - p2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt(), "mc {p1}±{s1} is {p2}±{s2}");
    assert_eq!(is["method"], "importance");
}

// ---------------------------------------------------------------------------
// law / phase
// ---------------------------------------------------------------------------

fn law(dir: &Path, extra: &[&str]) -> Output {
    let mut a = vec![
        "law", "--scores", pm1(), "--gap", "affine:8,2", "--nmax", "128", "--reps", "3", "--seed", "9", "--out",
        s(dir),
    ];
    a.extend_from_slice(extra);
    run(&a)
}

#[test]
fn law_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    assert!(law(dir.path(), &[]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("law.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,rep,H,Hinf,zstar,H_over_logn,zstar_over_logn"));
    assert_eq!(lines.count(), 6);
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("law_summary.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["n_grid"], serde_json::json!([64, 128]));
    assert_eq!(v["partial"], false);
    assert_eq!(v["summary"].as_array().unwrap().len(), 2);
    assert!(v["predictions"]["theta_star"].is_number());
}

#[test]
fn law_partial_on_exhausted_budget() {
    let dir = tempfile::tempdir().unwrap();
    assert!(law(dir.path(), &["--budget-secs", "0"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("law.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("law_summary.json")).unwrap()).unwrap();
    assert_eq!(v["partial"], true);
    assert_eq!(v["completed"], serde_json::json!([]));
}

#[test]
fn law_without_out_is_usage_error() {
    assert_eq!(code(&["law", "--scores", pm1(), "--gap", "inf", "--nmax", "64"]), 2);
}

#[test]
fn phase_schema() {
    let v = ok_json(&[
        "phase",
        "--scores",
        pm1(),
        "--family",
        "affine",
        "--delta-grid",
        "1,2",
        "--Delta-grid",
        "4",
        "--n",
        "32",
        "--reps",
        "4",
        "--seed",
        "2",
    ]);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    for c in cells {
        assert_eq!(c["verdict"]["verdict"], "LogarithmicForLargeDelta");
        assert!(c["beta"]["beta"].is_number());
    }
    assert_eq!(v["seed"], 2);
    assert_eq!(v["reps"], 4);
}

// ---------------------------------------------------------------------------
// Reproducibility across thread counts
// ---------------------------------------------------------------------------

#[test]
fn outputs_identical_across_thread_counts() {
    let runs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| {
            let out = run(&[
                "--threads", t, "tail", "--scores", pm1(), "--gap", "affine:8,2", "--c", "5", "--m", "12", "--n",
                "12", "--method", "is", "--samples", "3000", "--seed", "5",
            ]);
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1]);

    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, t) in dirs.iter().zip(["1", "4"]) {
        assert!(law(d.path(), &["--threads", t]).status.success());
    }
    for f in ["law.csv", "law_summary.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
