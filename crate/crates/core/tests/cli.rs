use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_qv-shadow");

fn run(args: &[&str]) -> (i32, Vec<u8>, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        out.stdout,
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn identical_configs_give_identical_bytes() {
    for args in [
        &["teleport", "--shots", "200", "--seed", "7"][..],
        &["swap", "--shots", "200", "--seed", "3"],
        &["collapse", "--shots", "200"],
        &["doubleslit", "--format", "csv"],
        &["erratum"],
    ] {
        let (c1, a, _) = run(args);
        let (c2, b, _) = run(args);
        assert_eq!((c1, c2), (0, 0), "{args:?}");
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn teleport_document_has_unit_fidelity() {
    let (code, out, _) = run(&["teleport", "--alpha", "0.6", "--beta", "0.8i", "--resource", "phi-minus", "--shots", "100", "--seed", "7"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["config", "errata", "invariants", "results"]);
    let shots = doc["results"]["shots"].as_array().unwrap();
    assert_eq!(shots.len(), 100);
    for s in shots {
        assert!((s["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
    assert_eq!(doc["config"]["beta"][1].as_f64(), Some(0.8));
}

#[test]
fn algebra_residuals_vanish() {
    let (code, out, _) = run(&["algebra", "--modes", "3", "--nmax", "4"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
    for e in doc["results"]["report"]["entries"].as_array().unwrap() {
        assert!(e["residual"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn erratum_lists_computed_findings() {
    let (code, out, _) = run(&["erratum", "--seed", "1"]);
    let (_, other, _) = run(&["erratum", "--seed", "2"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let ids: Vec<&str> = doc["errata"].as_array().unwrap().iter().map(|f| f["id"].as_str().unwrap()).collect();
    for id in ["bell-pair-prefactor", "teleportation-resource", "teleportation-branches", "ladder-double-factor"] {
        assert!(ids.contains(&id), "{id}");
    }
    let other: serde_json::Value = serde_json::from_slice(&other).unwrap();
    assert_eq!(doc["errata"], other["errata"]);
}

#[test]
fn usage_errors_exit_two_and_name_the_flag() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, err) = run(&["evolve", "--points", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("--points"), "{err}");
    let (code, _, err) = run(&["collapse", "--zones", "1"]);
    assert_eq!(code, 2);
    assert!(err.contains("--zones"), "{err}");
    let (code, _, err) = run(&["teleport", "--resource", "chi-plus"]);
    assert_eq!(code, 2);
    assert!(err.contains("--resource"), "{err}");
}

#[test]
fn failed_invariants_exit_one() {
    // A step this coarse spreads the packet noticeably slower than the closed form.
    let (code, out, err) = run(&["evolve", "--dt", "2", "--steps", "5", "--record-every", "5"]);
    assert_eq!(code, 1, "{err}");
    let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(doc["invariants"]["free-width"]["passed"], false);
    assert!(err.contains("free-width"));
}

#[test]
fn output_flag_writes_the_same_document() {
    let dir = std::env::temp_dir().join(format!("qv-shadow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bell.json");
    let (code, stdout, _) = run(&["bell", "--shots", "50"]);
    let (code2, empty, _) = run(&["bell", "--shots", "50", "--output", path.to_str().unwrap()]);
    assert_eq!((code, code2), (0, 0));
    assert!(empty.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn csv_emits_one_row_per_bin() {
    let (code, out, _) = run(&["doubleslit", "--bins", "32", "--format", "csv"]);
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 33);
    assert!(lines[0].starts_with("analytic_probability,bin,centre,count"));
}
