use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shortcut-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

fn field(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn spectrum_cond_proxy_is_depth_invariant_for_two_shortcut() {
    let dir = tempfile::tempdir().unwrap();
    let mut conds = Vec::new();
    for depth in ["1", "2", "4", "8"] {
        let out = dir.path().join(format!("s{depth}.csv"));
        let o = lab(&[
            "spectrum", "--n", "2", "--depth", depth, "--width", "4", "--samples", "30", "--data", "synthetic:3",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("cond_proxy"));
        let rows = read_csv(&out);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r["pass"] == "true"));
        conds.push(field(&rows[0], "cond_proxy"));
    }
    for c in &conds {
        assert!((c / conds[0] - 1.0).abs() < 1e-9, "{conds:?}");
    }
}

#[test]
fn spectrum_reports_zero_hessian_for_three_shortcut() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = lab(&[
        "spectrum", "--n", "3", "--depth", "1", "--width", "3", "--samples", "12", "--acts", "identity,tanh,identity",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("zero Hessian"));
    for row in read_csv(&out) {
        assert_eq!(row["degenerate"], "true");
        assert_eq!(row["cond_proxy"], "inf");
    }
}

#[test]
fn missing_data_file_names_the_path() {
    let o = lab(&["spectrum", "--n", "2", "--data", "/no/such/file.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/no/such/file.csv"), "{}", stderr(&o));
}

#[test]
fn unknown_flags_and_bad_values_are_rejected() {
    assert!(!lab(&["spectrum", "--n", "2", "--colour"]).status.success());
    assert!(!lab(&["spectrum", "--n", "2", "--acts", "relu,relu"]).status.success());
    assert!(!lab(&["spectrum", "--n", "0"]).status.success());
}

#[test]
fn probe_exponents_match_order() {
    for (n, acts) in [("1", "identity,identity,identity"), ("2", "identity,identity,identity"), ("4", "identity,tanh,identity")] {
        let o = lab(&["probe", "--n", n, "--depth", "2", "--width", "3", "--samples", "12", "--acts", acts, "--seed", "1"]);
        assert!(o.status.success(), "n = {n}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("pass"));
    }
}

#[test]
fn construct_fits_and_norms_shrink_with_units() {
    let dir = tempfile::tempdir().unwrap();
    let mut norms = Vec::new();
    for units in ["40", "80"] {
        let out = dir.path().join(units);
        let o = lab(&[
            "construct", "--data", "sphere:0", "--samples", "3", "--width", "4", "--units", units, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
        let rows = read_csv(&out.join("construction.csv"));
        assert!(field(&rows[0], "fit_error") <= 1e-9);
        assert_eq!(rows[0]["pass"], "true");
        norms.push(field(&rows[0], "max_frobenius"));
        let json = std::fs::read_to_string(out.join("network.json")).unwrap();
        let net: shortcut_lab::netjson::NetworkJson = serde_json::from_str(&json).unwrap();
        assert_eq!(net.units.to_string(), units);
    }
    assert!((norms[0] / norms[1] - 2f64.sqrt()).abs() < 0.01 * 2f64.sqrt(), "{norms:?}");
}

#[test]
fn construct_rejects_duplicate_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    std::fs::write(&path, "0, 1, 0, 0\n0, 0, 1, 0\n1, 0, 0, 1\n").unwrap();
    let o = lab(&["construct", "--data", path.to_str().unwrap(), "--width", "3", "--units", "50", "--out",
        dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("minimum-distance"), "{}", stderr(&o));
}

const CELL: &str = r#"{
    "data": "synthetic:0", "width": 3, "samples": 12,
    "depths": [2], "epochs": 20, "seeds": [0], "learning_rates": [0.1], "snapshot_interval": 10,
    "arms": [{"label": "zp", "n": 2, "init": "zero_perturbed"}]
}"#;

#[test]
fn train_single_cell_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, CELL).unwrap();
    let out = dir.path().join("out");
    let o = lab(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out.join("runs.csv"));
    assert_eq!(rows.len(), 1);
    assert!(!rows[0]["first_index"].is_empty());
    let trace = read_csv(&out.join("trace_d2_zp_lr1e-1_s0.csv"));
    assert_eq!(trace.len(), 21);
    assert!(!trace[10]["index"].is_empty() && trace[5]["index"].is_empty());
}

#[test]
fn sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, CELL.replace("[0.1]", "[0.01, 0.1]").replace("[0]", "[0, 1]")).unwrap();
    let out = dir.path().join("out");
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_csv(&out.join("sweep.csv")).len(), 4);
    let summary = read_csv(&out.join("summary.csv"));
    assert_eq!(summary.len(), 1);
    assert!(stdout(&o).contains("zp"));
}

#[test]
fn malformed_or_missing_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, CELL.replace("\"epochs\"", "\"epoch\"")).unwrap();
    let out = dir.path().join("out");
    let o = lab(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("epoch"), "{}", stderr(&o));
    let o = lab(&["sweep", "--config", "/no/config.json", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/no/config.json"));
}

#[test]
fn verify_hessian_cases() {
    for (n, acts) in [("2", "identity,identity,identity"), ("2", "relu,relu,tanh"), ("1", "identity,identity,identity")] {
        let o = lab(&["verify-hessian", "--n", n, "--depth", "2", "--width", "3", "--samples", "15", "--acts", acts]);
        assert!(o.status.success(), "n = {n} {acts}: {}{}", stdout(&o), stderr(&o));
    }
    let o = lab(&["verify-hessian", "--n", "1", "--acts", "relu,identity,identity"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("identity pre and post"));
    assert!(!lab(&["verify-hessian", "--n", "3"]).status.success());
}

#[test]
fn identical_flags_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("{k}.csv"));
            let o = lab(&["spectrum", "--n", "1", "--depth", "3", "--width", "3", "--samples", "20", "--out",
                out.to_str().unwrap()]);
            assert!(o.status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}
