use std::process::Command;

fn plurilab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_plurilab"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn exit_codes() {
    assert_eq!(
        plurilab(&["certify", "--target", "norm-squared", "--n", "1"]).0,
        0
    );
    assert_eq!(
        plurilab(&["certify", "--target", "saddle", "--n", "1"]).0,
        1
    );
    assert_eq!(plurilab(&["demo-counterexample", "--n", "1"]).0, 2);
    let (code, _, err) = plurilab(&["certify", "--target", "x1", "--ppa", "16"]);
    assert_eq!(code, 3);
    assert!(err.contains("grid.points_per_axis"), "{err}");
    assert_eq!(plurilab(&["no-such-command"]).0, 3);
    assert_eq!(plurilab(&["--help"]).0, 0);
}

#[test]
fn config_file_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command":"extend","target":"trivial","grid":{"n":1},"seed":3}"#,
    )
    .unwrap();
    let json = dir.path().join("out.json");
    let csv = dir.path().join("chain.csv");
    let (code, stdout, _) = plurilab(&[
        "extend",
        "--config",
        cfg.to_str().unwrap(),
        "--out-json",
        json.to_str().unwrap(),
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["command"], "extend");
    assert_eq!(report["result"]["conclusion"], "Certified");
    assert_eq!(report["inputs"]["seed"], 3);
    assert!(report["timing_ms"].as_f64().unwrap() >= 0.0);
    let chain = std::fs::read_to_string(&csv).unwrap();
    assert!(chain.starts_with("delta,r,T_index,u_gap,gamma_gap,phi_bound,hessian_form_min\n"));
    assert!(chain.lines().count() > 1);
    let abp = std::fs::read_to_string(dir.path().join("chain.abp.csv")).unwrap();
    assert_eq!(abp.lines().count(), 4);
}

#[test]
fn config_command_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command":"abp","target":"trivial"}"#).unwrap();
    let (code, _, err) = plurilab(&["extend", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("command"), "{err}");
    std::fs::write(
        &cfg,
        r#"{"command":"abp","target":"trivial","grid":{"n":1,"colour":2}}"#,
    )
    .unwrap();
    assert_eq!(plurilab(&["abp", "--config", cfg.to_str().unwrap()]).0, 3);
}

#[test]
fn catalog_and_envelope_reports() {
    let (code, stdout, _) = plurilab(&["catalog"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["entries"].as_array().unwrap().len(), 14);
    assert_eq!(v["result"]["scenarios"].as_array().unwrap().len(), 5);

    let (code, stdout, _) = plurilab(&[
        "envelope", "--target", "trivial", "--n", "1", "--delta", "0.2",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let r = &v["result"];
    let gap = (r["gamma_at_center"].as_f64().unwrap() - r["lp_at_center"].as_f64().unwrap()).abs();
    assert!(gap < 0.05 * r["h"].as_f64().unwrap());
    assert!(r["contact_count"].as_u64().unwrap() > 0);
}

#[test]
fn abp_sweep_from_flags() {
    let (code, stdout, _) = plurilab(&[
        "abp", "--target", "trivial", "--n", "1", "--delta", "0.1,0.2",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let reports = v["result"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        let d = r["delta"].as_f64().unwrap();
        assert!((r["sup_abs"].as_f64().unwrap() - d.powi(3)).abs() < 1e-12);
    }
}
