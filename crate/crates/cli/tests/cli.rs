use std::path::PathBuf;
use std::process::{Command, Output};

fn phase(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../phases").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hessdecay")).args(args).output().expect("spawn hessdecay")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn analyze_cusp() {
    let p = phase("cusp.json");
    let v = stdout_json(&run(&["analyze", "--phase", p.to_str().unwrap()]));
    assert_eq!(v["vertices"], serde_json::json!([[0, 2], [4, 0]]));
    assert_eq!(v["s"], 0);
    assert_eq!(v["edges"][0]["beta2"], "1/2");
    assert_eq!(v["fold_verdict"], "violation");
}

#[test]
fn analyze_diagonal_has_no_edges() {
    let p = phase("diagonal.json");
    let v = stdout_json(&run(&["analyze", "--phase", p.to_str().unwrap()]));
    assert_eq!(v["vertices"], serde_json::json!([[2, 2]]));
    assert_eq!(v["s"], 1);
    assert!(v["fold_verdict"].is_null());
}

#[test]
fn integrate_reproduces_a_scan_cell() {
    let dir = tempfile::tempdir().unwrap();
    let p = phase("cubic.json");
    let fit = dir.path().join("fit.json");
    let csv_path = dir.path().join("scan.csv");
    let o = run(&[
        "scan",
        "--phase",
        p.to_str().unwrap(),
        "--lambda-exp-min",
        "4",
        "--lambda-exp-max",
        "4",
        "--eps-exp-min",
        "-2",
        "--eps-exp-max",
        "-2",
        "--xi-grid",
        "9",
        "--fit-out",
        fit.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    let headers = rd.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["lambda", "eps", "xi1", "xi2", "absval", "est_error"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let absval: f64 = rows[0][4].parse().unwrap();
    let xi = format!("{},{}", &rows[0][2], &rows[0][3]);

    let v = stdout_json(&run(&[
        "integrate",
        "--phase",
        p.to_str().unwrap(),
        "--lambda",
        "16",
        "--eps",
        "0.25",
        "--xi",
        &xi,
    ]));
    let abs = v["abs"].as_f64().unwrap();
    assert!((abs - absval).abs() <= 1e-6 * absval, "{abs} vs {absval}");

    // too few grid points for a fit; the failure is reported, not fatal
    let f: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert!(f["error"].as_str().unwrap().contains("distinct"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["integrat"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_phase_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dimension\": 2,\n \"terms\": [{\"exp\": [1, 1], \"num\": }]}").unwrap();
    let o = run(&["analyze", "--phase", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn missing_phase_file_is_an_io_error() {
    let o = run(&["analyze", "--phase", "/nonexistent/phase.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "max_nodes = 1000\n").unwrap();
    let p = phase("cubic.json");
    let o = run(&[
        "integrate",
        "--config",
        cfg.to_str().unwrap(),
        "--phase",
        p.to_str().unwrap(),
        "--lambda",
        "256",
        "--eps",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "xi_grdi = 9\n").unwrap();
    let p = phase("cusp.json");
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--phase", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("xi_grdi"));
}

#[test]
fn help_lists_defaults() {
    let o = run(&["scan", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("[default: 4]"), "{text}");
    assert!(text.contains("[default: 17]"), "{text}");
    assert!(text.contains("[default: -8]"), "{text}");
}

#[test]
fn identical_runs_are_bit_identical() {
    let p = phase("cusp.json");
    let p = p.to_str().unwrap();
    let a = run(&["boxes", "--phase", p, "--eps", "0.001", "--cap", "6"]);
    let b = run(&["boxes", "--phase", p, "--eps", "0.001", "--cap", "6"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let c = phase("cubic.json");
    let c = c.to_str().unwrap();
    let args = ["integrate", "--phase", c, "--lambda", "32", "--eps", "0.125", "--xi", "0.05,-0.03"];
    let x = run(&args);
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let y = run(&one);
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn vdc_check_bound_holds_for_fresnel() {
    let p = phase("fresnel.json");
    let o = run(&["vdc-check", "--phase", p.to_str().unwrap(), "--t-points", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "lhs", "rhs", "ratio"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let ratio: f64 = r[3].parse().unwrap();
        assert!(ratio > 0.0 && ratio <= 1.0, "{ratio}");
    }
}

#[test]
fn dimension_mismatch_is_a_usage_error() {
    let p = phase("fresnel.json");
    let o = run(&["integrate", "--phase", p.to_str().unwrap(), "--lambda", "8", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}
