//! Black-box CLI behavior: train/predict round trips, seeded determinism,
//! output formats, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn gbtwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbtwin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let data = fixture("iris.csv");
    let out = gbtwin(&[
        "train",
        data.to_str().unwrap(),
        "--mode",
        "gb-twksvc",
        "--seed",
        "0",
        "-o",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());

    let pred = gbtwin(&[
        "predict",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    let text = stdout_of(&pred);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,predicted,actual");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 150);
    // training-set predictions at default hyperparameters are decent and the
    // label columns decode to the original names
    let correct = rows
        .iter()
        .filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            f[1] == f[2]
        })
        .count();
    assert!(correct >= 120, "only {correct}/150 training points correct");
    assert!(rows[0].contains("setosa"));
}

#[test]
fn seeded_training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("seeds.csv");
    let m1 = dir.path().join("a.json");
    let m2 = dir.path().join("b.json");
    for m in [&m1, &m2] {
        let out = gbtwin(&[
            "train",
            data.to_str().unwrap(),
            "--seed",
            "42",
            "-o",
            m.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read_to_string(&m1).unwrap();
    let b = std::fs::read_to_string(&m2).unwrap();
    assert_eq!(a, b, "same seed must produce byte-identical models");
}

#[test]
fn env_seed_is_used_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("iris.csv");
    let run = |seed_env: Option<&str>, args_extra: &[&str], out_path: &Path| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gbtwin"));
        cmd.args(["train", data.to_str().unwrap(), "-o", out_path.to_str().unwrap()]);
        cmd.args(args_extra);
        if let Some(s) = seed_env {
            cmd.env("GBTWIN_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    let from_env = dir.path().join("env.json");
    let from_flag = dir.path().join("flag.json");
    let flag_over_env = dir.path().join("both.json");
    run(Some("7"), &[], &from_env);
    run(None, &["--seed", "7"], &from_flag);
    run(Some("1234"), &["--seed", "7"], &flag_over_env);
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&from_env), read(&from_flag));
    assert_eq!(read(&from_flag), read(&flag_over_env));
}

#[test]
fn gen_balls_emits_csv() {
    let out = gbtwin(&["gen-balls", fixture("iris.csv").to_str().unwrap(), "--seed", "0"]);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("label,radius,member_count,c0"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3 + 4, "iris balls carry 4 coordinates");
        assert!(fields[1].parse::<f64>().unwrap() >= 0.0);
        assert!(fields[2].parse::<usize>().unwrap() >= 1);
    }
}

#[test]
fn cv_reports_json() {
    let out = gbtwin(&[
        "cv",
        fixture("iris.csv").to_str().unwrap(),
        "--folds",
        "5",
        "--seed",
        "0",
    ]);
    let text = stdout_of(&out);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["per_fold_accuracy"].as_array().unwrap().len(), 5);
    assert!(v["mean_accuracy"].as_f64().unwrap() > 0.0);
}

#[test]
fn bench_emits_expected_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("bench.csv");
    let out = gbtwin(&[
        "bench",
        "--datasets",
        fixture("iris.csv").to_str().unwrap(),
        "--models",
        "gb-twksvc,twin-ksvc",
        "--seed",
        "0",
        "-o",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,model,mean_accuracy,std_accuracy,mean_time_s"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "iris");
        assert!(f[2].parse::<f64>().unwrap() > 50.0);
    }
}

#[test]
fn sensitivity_emits_grid_rows() {
    let out = gbtwin(&[
        "sensitivity",
        fixture("iris.csv").to_str().unwrap(),
        "--num-grid",
        "2,3",
        "--purity-grid",
        "0.97,0.99",
        "--seed",
        "0",
    ]);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "num,purity,mean_accuracy");
    assert_eq!(lines.count(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let out = gbtwin(&["train"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gbtwin(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn module_errors_exit_1() {
    let out = gbtwin(&["train", "/nonexistent/nope.csv", "-o", "/tmp/never-written.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
