mod common;

use std::process::Command;

use common::{code, f64_at, json, mubs, result};

#[test]
fn documents_embed_version_config_and_seed() {
    let out = mubs(&[
        "integrate",
        "--witness",
        "h",
        "--dim",
        "3",
        "--samples",
        "500",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["tool"], "mubs");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["config"]["global"]["seed"], 9);
    assert_eq!(doc["config"]["args"]["samples"], 500);
    assert_eq!(doc["result"]["estimate"]["seed"], 9);
}

#[test]
fn seed_defaults_from_the_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mubs"));
        cmd.args([
            "integrate",
            "--witness",
            "h0",
            "--dim",
            "2",
            "--samples",
            "100",
        ])
        .args(extra);
        match env {
            Some(s) => cmd.env("MUBS_SEED", s),
            None => cmd.env_remove("MUBS_SEED"),
        };
        cmd.output().unwrap()
    };
    assert_eq!(json(&run(Some("123"), &[]))["seed"], 123);
    assert_eq!(json(&run(Some("123"), &["--seed", "5"]))["seed"], 5);
    assert_eq!(json(&run(None, &[]))["seed"], 0);
    assert_eq!(code(&run(Some("not-a-number"), &[])), 2);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["integrate", "--witness", "nope"],
        vec!["integrate", "--witness", "m1", "--dim", "5"],
        vec!["integrate", "--witness", "h", "--samples", "1"],
        vec!["bound", "--witness", "m:sum_sq"],
        vec!["bound", "--witness", "h", "--format", "csv"],
        vec!["eps-scan", "--kind", "bogus"],
        vec!["eps-scan", "--kind", "sum_sq", "--grid", "0.2,0.1"],
        vec!["mub", "gen", "--dim", "6"],
        vec!["mub", "verify", "--in", "/nonexistent/file.json"],
        vec!["catalog", "get", "--family", "F6ab", "--params", "1"],
        vec!["catalog", "get", "--family", "X7"],
        vec!["gram", "--witness", "m1"],
        vec!["no-such-command"],
    ] {
        let out = mubs(&args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn bounds() {
    let out = mubs(&["bound", "--witness", "h", "--dim", "6"]);
    assert_eq!(code(&out), 0);
    assert_eq!(f64_at(&result(&out), "/bound"), 7.0);
    let beta = result(&mubs(&["bound", "--witness", "h_beta:1.2", "--dim", "6"]));
    assert!((f64_at(&beta, "/bound") - 28.0 / 3.0).abs() < 1e-12);
    let out = mubs(&["bound", "--witness", "h_beta:2", "--dim", "6"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Delsarte hypothesis fails"));
}

#[test]
fn monte_carlo_bound_is_an_interval() {
    let out = mubs(&[
        "bound",
        "--witness",
        "h",
        "--dim",
        "4",
        "--samples",
        "5000",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    let r = result(&out);
    let (lo, hi) = (
        f64_at(&r, "/bound_interval/0"),
        f64_at(&r, "/bound_interval/1"),
    );
    assert!(lo < 5.0 && 5.0 < hi, "{r}");
    assert!(r["conditional"].is_null());
}

#[test]
fn mub_round_trip_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mubs_d9.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&mubs(&["mub", "gen", "--dim", "9", "--out", p])), 0);
    let out = mubs(&["mub", "verify", "--in", p]);
    assert_eq!(code(&out), 0);
    let r = result(&out);
    assert_eq!(r["verification"]["ok"], true);
    assert_eq!(r["verification"]["n_bases"], 10);
    let audit = mubs(&["audit", "--in", p, "--witness", "h"]);
    assert_eq!(code(&audit), 0);
    assert!(f64_at(&result(&audit), "/gap") <= 1e-6);
    let gram = result(&mubs(&["gram", "--witness", "h", "--in", p]));
    assert!((f64_at(&gram, "/report/lambda_min") - 8.0).abs() < 1e-9);
}

#[test]
fn biased_system_is_an_invariant_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("biased.json");
    let id = serde_json::json!({
        "dim": 2,
        "entries": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
    });
    let system = serde_json::json!({ "dim": 2, "bases": [id, id] });
    std::fs::write(&path, system.to_string()).unwrap();
    let p = path.to_str().unwrap();
    let out = mubs(&["mub", "verify", "--in", p]);
    assert_eq!(code(&out), 1);
    assert_eq!(result(&out)["verification"]["ok"], false);
    assert_eq!(code(&mubs(&["audit", "--in", p])), 1);
}

#[test]
fn conjecture_finding_exits_4() {
    let out = mubs(&["conj6", "check", "--family", "S6"]);
    assert_eq!(code(&out), 4);
    let r = result(&out);
    assert_eq!(r["n_non_vanishing"], 1);
    assert_eq!(r["non_vanishing_families"][0], "S6");
    let clean = mubs(&[
        "conj6", "check", "--family", "F6ab", "--grid", "11", "--tol", "1e-8", "--json",
    ]);
    assert_eq!(code(&clean), 0);
    assert_eq!(result(&clean)["n_targets"], 121);
}

#[test]
fn csv_for_curves() {
    let out = mubs(&[
        "eps-scan",
        "--kind",
        "prod_sq",
        "--grid",
        "0,0.5",
        "--trials",
        "5",
        "--restarts",
        "0",
        "--mean-samples",
        "0",
        "--format",
        "csv",
        "--seed",
        "4",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# mubs ") && lines[0].contains("seed=4"));
    assert!(lines[1].starts_with("# config="));
    assert_eq!(
        lines[2],
        "eps,lambda_min,trial_lambda_min,search_lambda_min,trials"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("0,"));
}

#[test]
fn runs_are_deterministic() {
    let args = [
        "pd-scan",
        "--witness",
        "h",
        "--dim",
        "4",
        "--m",
        "6",
        "--trials",
        "10",
        "--restarts",
        "2",
        "--steps",
        "30",
        "--seed",
        "8",
    ];
    let (a, b) = (mubs(&args), mubs(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn gram_projector_cross_check() {
    let out = mubs(&[
        "gram",
        "--witness",
        "h0",
        "--dim",
        "4",
        "--m",
        "9",
        "--projector",
        "--alpha0",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let r = result(&out);
    assert!(f64_at(&r, "/projector_max_deviation") <= 1e-9);
    assert_eq!(r["report"]["psd"], true);
    assert_eq!(r["theorem_backed"], true);
    assert_eq!(code(&mubs(&["gram", "--witness", "h", "--projector"])), 2);
}

#[test]
fn catalog_listing() {
    let r = result(&mubs(&["catalog", "list"]));
    let names: Vec<&str> = r["families"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["F6", "F6ab", "F6abT", "D6c", "C6", "S6"]);
    let get = result(&mubs(&[
        "catalog", "get", "--family", "F6ab", "--params", "0.3,1.1",
    ]));
    assert_eq!(get["is_scaled_hadamard"], true);
}

#[test]
fn out_flag_writes_the_same_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let args = ["bound", "--witness", "h", "--dim", "5"];
    let stdout = mubs(&args).stdout;
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = mubs(&with_out);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}
