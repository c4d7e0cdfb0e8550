use std::fs;
use std::process::Command;

fn locdim(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_locdim")).args(args).output().unwrap();
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn run_then_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let out = dir.path().join("results.json");
    fs::write(&cfg, r#"{"target":"fig2","n":40,"repetitions":2,"n_eval":1000,"estimators":["mean","knn"],"lambda":1.0}"#)
        .unwrap();
    let (ok, _, err) = locdim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    let first = fs::read_to_string(&out).unwrap();
    let (ok, _, _) = locdim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(ok);
    assert_eq!(fs::read_to_string(&out).unwrap(), first);
    let (ok, table, _) = locdim(&["table", out.to_str().unwrap()]);
    assert!(ok);
    assert!(table.contains("fig2") && table.contains("knn") && table.contains("normalizer"));
}

#[test]
fn verify_lemma_and_oracle() {
    let (ok, json, _) = locdim(&["verify-lemma", "mult", "--R", "1000", "--a", "1", "--points", "41"]);
    assert!(ok);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["holds"], true);
    let (ok, vals, _) = locdim(&["oracle", "eval", "--target", "m1", "--x", "1,1,1,1,1,1,1,1,1,1"]);
    assert!(ok);
    let m: f64 = vals.trim().parse().unwrap();
    assert!((m - (1f64.exp() + 1.0 + 1f64.sin() - 3.0)).abs() < 1e-12);
    let (ok, _, err) = locdim(&["oracle", "eval", "--target", "m9", "--x", "0"]);
    assert!(!ok && err.contains("m9"));
}

#[test]
fn fit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let mut body = String::from("a,b,y\n");
    for i in 0..40 {
        let (a, b) = (i as f64 / 40.0, (i * 7 % 40) as f64 / 40.0);
        body.push_str(&format!("{a},{b},{}\n", a + 2.0 * b));
    }
    fs::write(&csv, body).unwrap();
    let (ok, json, err) = locdim(&["fit", "--csv", csv.to_str().unwrap(), "--target-column", "y", "--estimator", "knn"]);
    assert!(ok, "{err}");
    assert!(json.contains("\"k\""));
    let (ok, _, err) = locdim(&["fit", "--csv", csv.to_str().unwrap(), "--target-column", "z"]);
    assert!(!ok && err.contains('z'));
}
