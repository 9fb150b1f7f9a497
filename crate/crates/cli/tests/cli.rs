use std::path::Path;
use std::process::{Command, Output};

fn nilwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilwalk"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn heisenberg_step_and_witness() {
    let o = nilwalk(&["step", "--n", "3", "--v", "1^+1", "--w", "2^+1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("step=2 witness=VW"), "{}", stdout(&o));
}

#[test]
fn commuting_letters_have_step_one() {
    let o = nilwalk(&["step", "--n", "4", "--v", "1^+1", "--w", "3^-1"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("step=1 witness=V"), "{s}");
    assert!(s.contains("abelian=true supercommute=true"), "{s}");
}

#[test]
fn oracle_enumeration_is_exact() {
    let o = nilwalk(&["oracle-enumerate", "--n", "3", "--ell", "1"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("P(abelian)=1/2"), "{s}");
    assert!(s.contains("pairs=16"), "{s}");
}

#[test]
fn abelian_curve_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = nilwalk(&[
        "abelian-curve",
        "--c",
        "1",
        "--n",
        "2500",
        "--trials",
        "20000",
        "--seed",
        "42",
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("seed=42"), "{s}");
    let line = s
        .lines()
        .find(|l| l.starts_with("abelian-curve.abelian "))
        .unwrap();
    assert!(line.contains("theory=0.13534"), "{line}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("\nexperiment,n,ell,c,trials,estimate,stderr,theory,seed\n"));
    assert!(csv.contains("# seed: 42"));
    assert!(csv.contains("\nabelian-curve.abelian,2500,50,1,20000,"));
}

#[test]
fn same_invocation_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = nilwalk(&[
            "full-step-scan",
            "--n",
            "6,8",
            "--trials",
            "500",
            "--seed",
            "5",
            "--workers",
            "3",
            "--records",
            "--out",
            path_arg(&path),
        ]);
        assert_eq!(code(&o), 0);
        let records = std::fs::read(dir.path().join(format!("{name}.records.csv"))).unwrap();
        (std::fs::read_to_string(&path).unwrap(), records)
    };
    let (a, ra) = run("a.csv");
    let (b, rb) = run("b.csv");
    // Only the embedded output path differs.
    assert_eq!(a.replace("a.csv", "X"), b.replace("b.csv", "X"));
    assert_eq!(ra, rb);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "empty-bins", "n_values": [20], "trials": 300, "seed": 9,
            "length_rules": [{"rule": "explicit", "ell": 10}]}"#,
    )
    .unwrap();
    let o = nilwalk(&[
        "empty-bins",
        "--config",
        path_arg(&cfg),
        "--trials",
        "200",
        "--format",
        "json",
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["meta"]["seed"], 9);
    let rows = doc["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows
        .iter()
        .all(|r| r["trials"] == 200 && r["ell"] == 10 && r["n"] == 20));
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "d-statistic", "n_values": [20]}"#).unwrap();
    let o = nilwalk(&["empty-bins", "--config", path_arg(&cfg)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn argument_errors_exit_two() {
    for args in [
        &["abelian-curve", "--n", "10", "--bogus"][..],
        &["abelian-curve"],
        &["abelian-curve", "--n", "1"],
        &["step", "--n", "3", "--v", "3^+1", "--w", ""],
        &["d-statistic", "--n", "10", "--rule", "sqrt:-1"],
        &["empty-bins", "--config", "/nonexistent/cfg.json"],
        &["frobnicate"],
    ] {
        let o = nilwalk(args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn unwritable_output_reports_the_path() {
    let o = nilwalk(&[
        "d-statistic",
        "--n",
        "10",
        "--trials",
        "10",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/dir/x.csv"));
}

#[test]
fn budget_overrun_exits_three() {
    let o = nilwalk(&[
        "oracle-enumerate",
        "--n",
        "4",
        "--ell",
        "3",
        "--budget",
        "100",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn dist_prints_exact_and_quadrature_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dist.csv");
    let o = nilwalk(&["dist", "--n", "2", "--ell", "2", "--out", path_arg(&out)]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    // n = 2: steps +-1 with probability 1/2 each.
    assert!(s.contains("P(0)=1/2"), "{s}");
    assert!(
        s.contains("quadrature=5e-1") || s.contains("quadrature=4.99999"),
        "{s}"
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("offset,probability,rational\n"));
}

#[test]
fn help_documents_every_subcommand() {
    let subcommands = [
        "abelian-curve",
        "supercommute-gap",
        "zero-constant",
        "d-statistic",
        "full-step-scan",
        "empty-bins",
        "type-i-census",
        "oracle-enumerate",
        "step",
        "dist",
    ];
    for sub in subcommands {
        let o = nilwalk(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        let s = stdout(&o);
        assert!(s.contains("Usage: nilwalk"), "{sub}");
        assert!(s.lines().count() > 10, "{sub}");
    }
    let o = nilwalk(&["abelian-curve", "--help"]);
    let s = stdout(&o);
    for needle in [
        "exp(-2c^2)",
        "[default: 10000]",
        "[default: 0]",
        "--workers",
    ] {
        assert!(s.contains(needle), "missing {needle}");
    }
}
