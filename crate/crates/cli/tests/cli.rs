use std::path::Path;
use std::process::{Command, Output};

fn equiflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equiflow"))
        .args(args)
        .env("EQUIFLOW_THREADS", "1")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_dataset(dir: &Path, rotate: bool) {
    let mut args = vec!["synth", "--count", "5", "--seed", "7", "--min-segments", "6", "--max-segments", "6", "--out", s(dir)];
    if rotate {
        args.push("--rotate");
    }
    let out = equiflow(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn train_args<'a>(data: &'a str, out: &'a str, lr: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--data", data, "--model", "segnn", "--epochs", "2", "--lr", lr, "--seed", "1",
        "--hidden", "2x0e+1x1o", "--layers", "1", "--k", "6", "--ratio1", "0.5", "--ratio2", "0.5", "--out", out,
    ]
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(equiflow(&["synth", "--count", "3"]).status.code(), Some(2));
    let out = equiflow(&["train", "--data", "x", "--model", "transformer", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = tmp.path().join("nope.json");
    let out = equiflow(&["eval", "--data", s(tmp.path()), "--checkpoint", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn synth_writes_samples_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    small_dataset(&dir, true);
    let manifest = json(&dir.join("manifest.json"));
    let samples = manifest["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 5);
    for rec in samples {
        let rows = rec["motion"]["rotation"].as_array().expect("rotation recorded");
        assert_eq!(rows.len(), 3);
        assert!(dir.join(rec["file"].as_str().unwrap()).is_file());
    }
    let run = json(&dir.join("run_manifest.json"));
    assert_eq!(run["command"], "synth");
    assert_eq!(run["seed"], 7);
    assert_eq!(run["outputs"].as_array().unwrap().len(), 6);
}

#[test]
fn zero_learning_rate_keeps_initial_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_dataset(&data, false);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(equiflow(&train_args(s(&data), s(&a), "0")).status.success());
    assert!(equiflow(&train_args(s(&data), s(&b), "0.01")).status.success());
    let params = |d: &Path| json(&d.join("checkpoint.json"))["params"]["values"].clone();
    let loss = std::fs::read_to_string(a.join("loss.csv")).unwrap();
    let rows: Vec<&str> = loss.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let cols = |r: &str| r.split(',').skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert!(rows.iter().all(|r| cols(r) == cols(rows[0])));
    assert_ne!(params(&a), params(&b));
    assert_eq!(json(&a.join("run_manifest.json"))["command"], "train");
}

#[test]
fn segnn_metrics_do_not_depend_on_test_orientation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    small_dataset(&data, false);
    let model = tmp.path().join("model");
    assert!(equiflow(&train_args(s(&data), s(&model), "0.003")).status.success());
    let ckpt = model.join("checkpoint.json");
    let eps = |rotate: bool, out: &Path| {
        let mut args = vec!["eval", "--data", s(&data), "--checkpoint", s(&ckpt), "--out", s(out)];
        if rotate {
            args.extend(["--rotate-test", "--rotate-seed", "11"]);
        }
        let o = equiflow(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some("sample,nmae,eps,cos,cos_excluded"));
        let table = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
        assert!(table.contains("NMAE [%]"));
        csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse::<f64>().unwrap()
    };
    let (a, b) = (eps(false, &tmp.path().join("e0")), eps(true, &tmp.path().join("e1")));
    assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
}

#[test]
fn verify_passes_and_poison_fails_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.txt");
    let ok = equiflow(&["verify", "--out", s(&report)]);
    assert_eq!(ok.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    for name in ["descriptor_equivariance", "layer_equivariance", "end_to_end_equivariance", "gradient"] {
        assert!(text.contains(name), "{name} missing from report");
    }
    assert!(text.contains("max error"));

    let bad = equiflow(&["verify", "--poison"]);
    assert_eq!(bad.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    let line = stdout.lines().find(|l| l.starts_with("end_to_end_equivariance")).unwrap();
    assert!(line.ends_with("FAIL"));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("end_to_end_equivariance"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_equiflow"))
        .args(["verify"])
        .env("EQUIFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
