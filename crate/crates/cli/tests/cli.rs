use std::process::{Command, Output};

fn tuplewise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tuplewise"))
        .args(args)
        .env_remove("TUPLEWISE_OUT_DIR")
        .env_remove("CI")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn transition_matrix_fractions() {
    let o = tuplewise(&["exact", "transition-matrix"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "state,1,2,3,4,5,6");
    assert_eq!(rows[1], "1,5/8,3/8,0,0,0,0");
    assert_eq!(rows[6], "6,3/8,0,0,0,0,5/8");
}

#[test]
fn sample_path_contract() {
    let o = tuplewise(&["sample-path", "--window", "0:999", "--seed", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,X,N,anchor,J"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0], i.to_string());
        assert!(cols[1] == "1" || cols[1] == "-1");
    }
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["sample-path", "--window", "-50:400", "--seed", "9"];
    assert_eq!(tuplewise(&args).stdout, tuplewise(&args).stdout);
    let args = ["verify", "double-one", "--seed", "3", "--replicates", "200"];
    assert_eq!(tuplewise(&args).stdout, tuplewise(&args).stdout);
}

#[test]
fn verify_writes_report_to_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tuplewise"))
        .args(["verify", "tails", "--nmax", "4", "--positions", "200000", "--seed", "7"])
        .env("TUPLEWISE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("verify-tails.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["campaign"], "tails");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["pass"], true);
    let estimates = v["estimates"].as_array().unwrap();
    assert_eq!(estimates.len(), 5);
    let target = estimates[2]["target"].as_f64().unwrap();
    assert!((target - 0.140625).abs() < 1e-15);
    for field in ["name", "value", "stderr", "target", "verdict"] {
        assert!(estimates[0].get(field).is_some());
    }

    let summary = Command::new(env!("CARGO_BIN_EXE_tuplewise"))
        .args(["report", "--format", "json"])
        .env("TUPLEWISE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(summary.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&summary.stdout).unwrap();
    assert_eq!(s["reports"][0]["campaign"], "tails");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 5\nwindow = 0:9\nformat = csv\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&tuplewise(&["sample-path", "--config", cfg]));
    let explicit = stdout(&tuplewise(&["sample-path", "--seed", "5", "--window", "0:9"]));
    assert_eq!(from_file, explicit);
    let overridden = stdout(&tuplewise(&["sample-path", "--config", cfg, "--window", "0:4"]));
    assert_eq!(overridden.lines().count(), 6);
}

#[test]
fn exit_codes() {
    assert_eq!(tuplewise(&["sample-path", "--window", "5:1"]).status.code(), Some(64));
    assert_eq!(tuplewise(&["verify", "nonsense"]).status.code(), Some(64));
    assert_eq!(tuplewise(&["sample-path", "--depth", "50", "--budget-level", "10"]).status.code(), Some(64));
    let budget = tuplewise(&["sample-path", "--window", "0:5000", "--seed", "1", "--budget-level", "1"]);
    assert_eq!(budget.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&budget.stderr).contains("level 2"));
    let ci = Command::new(env!("CARGO_BIN_EXE_tuplewise")).args(["sample-path"]).env("CI", "true").output().unwrap();
    assert_eq!(ci.status.code(), Some(64));
}

#[test]
fn blocks_report() {
    let o = tuplewise(&["blocks", "--window", "0:20000", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r["sum"], 0);
        assert_eq!(r["pass"], true);
        let expected = if r["m"] == 1 { -1 } else { 1 };
        assert_eq!(r["product"], expected);
    }
}

#[test]
fn level_dump_columns() {
    let o = tuplewise(&["sample-path", "--levels", "--window", "-3:3", "--seed", "2", "--depth", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("k,W1,W2,W3,N,anchor,J\n"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn verify_measures_passes() {
    let o = tuplewise(&["verify", "measures", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("name,value,stderr,target,verdict\n"));
}
