use std::path::Path;
use std::process::{Command, Output};

fn sympl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sympl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(sympl(&["--help"]).status.code(), Some(0));
    assert_eq!(sympl(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sympl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sympl(&["scatter", "--tol", "-1"]).status.code(), Some(1));
    let o = sympl(&["scatter", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "c.json", r#"{"kind":"passive","bogus":1}"#);
    let o = sympl(&["scatter", "--config", &c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn randomized_runs_need_a_seed() {
    assert_eq!(sympl(&["permute-plan"]).status.code(), Some(1));
    assert_eq!(sympl(&["dilate"]).status.code(), Some(1));
    assert_eq!(sympl(&["dilate", "--seed", "3"]).status.code(), Some(0));
}

#[test]
fn domain_error_is_json_and_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "ch.json",
        r#"{"channel":{"T":{"rows":2,"cols":2,"data":[2,0,0,2]},
            "N":{"rows":2,"cols":2,"data":[0,0,0,0]},"d":[0,0]}}"#,
    );
    let out = dir.path().join("out.json");
    let o = sympl(&["dilate", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "NoPhysicalEnv");
    let left: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left.len(), 1, "only the config should remain: {left:?}");
}

#[test]
fn passive_sweep_direct_equals_transmittance() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "s.json",
        r#"{"model":"passive","t_sq":[0.1,0.8],"mu":[0.01],"nu":[0.01]}"#,
    );
    let o = sympl(&["fidelity-sweep", "--config", &c]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|x| x == name).unwrap();
    let (t, fd) = (col("t_sq"), col("f_direct"));
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let t2: f64 = r[t].parse().unwrap();
        let f: f64 = r[fd].parse().unwrap();
        assert!((f - t2).abs() < 1e-12);
    }
}

#[test]
fn ep_fisher_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ep.csv");
    let o = sympl(&["ep-fisher", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["theta", "I_mu", "I_sigma", "QFI_xbar", "QFI_V"] {
        assert!(
            header.split(',').any(|h| h == col),
            "missing {col} in {header}"
        );
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ep.summary.json")).unwrap())
            .unwrap();
    let slope = summary["slope"].as_f64().unwrap();
    assert!((slope + 4.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn dv_teleport_default_is_qubit_teleportation() {
    let o = sympl(&["dv-teleport"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["f_star"]["rows"], serde_json::json!([[0, 1], [1, 0]]));
    let csv = stdout(&sympl(&["dv-teleport", "--format", "csv"]));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn scatter_json_only_rejects_csv_cleanly() {
    let o = sympl(&["scatter", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn scatter_at_unit_cooperativity_transmits_fully() {
    let o = sympl(&["scatter"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["t"].as_f64().unwrap().abs() - 1.0).abs() < 1e-12);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
}
