use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eegattn::dataio::{read_trialset, trialset_to_bytes};

fn eegattn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegattn"))
        .args(args)
        .env_remove("EEGATTN_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = eegattn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tiny_synth(dir: &Path, name: &str, seed: u64, snr: f64) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "synth", "--out", s(&out), "--seed", &seed.to_string(), "--classes", "3", "--trials-per-class", "6",
        "--channels", "3", "--samples", "128", "--fs", "128", "--snr", &snr.to_string(),
    ]);
    out
}

#[test]
fn synth_default_dimensions_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.eegt");
    let b = dir.path().join("b.eegt");
    let text = ok(&["synth", "--out", s(&a), "--seed", "42"]);
    assert!(text.contains("299 trials"), "{text}");
    ok(&["synth", "--out", s(&b), "--seed", "42"]);
    let t = read_trialset(&a).unwrap();
    assert_eq!((t.n_trials(), t.n_channels(), t.n_samples), (299, 10, 500));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&a).unwrap(), trialset_to_bytes(&t).unwrap());
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.eegt.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["synth"]["seed"], 42);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.eegt");
    let b = dir.path().join("b.eegt");
    let args = ["--classes", "3", "--trials-per-class", "2", "--samples", "64", "--fs", "128"];
    let run = |out: &Path, env: Option<&str>, seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_eegattn"));
        c.env_remove("EEGATTN_SEED").args(["synth", "--out", s(out)]).args(args);
        if let Some(e) = env {
            c.env("EEGATTN_SEED", e);
        }
        if let Some(v) = seed {
            c.args(["--seed", v]);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(out).unwrap()
    };
    let env7 = run(&a, Some("7"), None);
    let flag7 = run(&b, None, Some("7"));
    assert_eq!(env7, flag7);
    let flag_wins = run(&b, Some("7"), Some("8"));
    assert_ne!(env7, flag_wins);
}

#[test]
fn invalid_input_maps_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.eegt");
    assert_eq!(eegattn(&["synth", "--out", s(&out), "--classes", "0"]).status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"train": {"epochz": 3}}"#).unwrap();
    assert_eq!(eegattn(&["--config", s(&cfg), "describe"]).status.code(), Some(2));

    let missing = dir.path().join("missing.eegt");
    let res = dir.path().join("r.json");
    assert_eq!(eegattn(&["train", "--data", s(&missing), "--out", s(&res)]).status.code(), Some(3));

    std::fs::write(&out, b"XXXX not a trial set").unwrap();
    assert_eq!(eegattn(&["train", "--data", s(&out), "--out", s(&res)]).status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"synth": {"n_classes": 4, "trials_per_class": 3, "n_samples": 100, "fs": 200}}"#).unwrap();
    let out = dir.path().join("d.eegt");
    ok(&["--config", s(&cfg), "synth", "--out", s(&out), "--trials-per-class", "5"]);
    let t = read_trialset(&out).unwrap();
    assert_eq!((t.n_classes, t.n_trials(), t.n_samples), (4, 20, 100));
}

#[test]
fn preprocess_raw_recording() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("rec.eegr");
    ok(&["synth", "--raw", "--out", s(&raw), "--seed", "3"]);
    let trials = dir.path().join("t.eegt");
    let text = ok(&["preprocess", "--input", s(&raw), "--out", s(&trials)]);
    assert!(text.contains("50 trials kept, 0 rejected"), "{text}");
    let t = read_trialset(&trials).unwrap();
    assert_eq!((t.n_trials(), t.n_channels(), t.n_samples), (50, 10, 500));
    assert_eq!(t.sampling_rate, 250.0);

    let unfiltered = dir.path().join("u.eegt");
    let text = ok(&["preprocess", "--input", s(&raw), "--out", s(&unfiltered), "--no-filter"]);
    assert!(!text.contains("bandpass"), "{text}");
    assert_ne!(read_trialset(&unfiltered).unwrap().data, t.data);

    // First marker at sample 10 of a 1 kHz recording: no room for the baseline.
    let early = dir.path().join("early.eegr");
    ok(&["synth", "--raw", "--out", s(&early), "--first-marker", "0.01", "--markers", "5", "--duration", "20"]);
    let text = ok(&["preprocess", "--input", s(&early), "--out", s(&trials)]);
    assert!(text.contains("4 trials kept, 1 rejected"), "{text}");
    assert!(text.contains("rejected marker 0 (sample 2"), "{text}");
}

#[test]
fn preprocess_reports_missing_channels() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("rec.eegr");
    ok(&["synth", "--raw", "--out", s(&raw), "--markers", "3", "--duration", "10"]);
    let out = eegattn(&["preprocess", "--input", s(&raw), "--out", s(&dir.path().join("t.eegt")), "--channels", "C3,Nope"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Nope"));
}

#[test]
fn train_eval_stats_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = tiny_synth(d, "s1.eegt", 1, 10.0);
    let r1 = d.join("r1.json");
    let r2 = d.join("r2.json");
    let weights = d.join("w");
    let conf = d.join("conf");
    let common = ["--epochs", "2", "--folds", "3", "--seed", "1"];
    let mut args = vec!["train", "--data", s(&data), "--out", s(&r1), "--weights-out", s(&weights), "--confusion-out", s(&conf)];
    args.extend(common);
    ok(&args);
    let mut args = vec!["train", "--data", s(&data), "--out", s(&r2), "--parallel-folds", "2"];
    args.extend(common);
    ok(&args);
    let doc1 = std::fs::read(&r1).unwrap();
    assert_eq!(doc1, std::fs::read(&r2).unwrap(), "parallel folds change the results");
    let v: serde_json::Value = serde_json::from_slice(&doc1).unwrap();
    assert_eq!(v["subjects"][0]["folds"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["train"]["epochs"], 2);
    assert_eq!(v["config"]["model"]["n_channels"], 3);
    assert!(d.join("r1.json.timings.json").exists());
    assert!(conf.join("s1.fold2.csv").exists());

    let w0 = weights.join("s1.fold0.eatw");
    let text = ok(&["eval", "--weights", s(&w0), "--data", s(&data), "--out", s(&d.join("e.json"))]);
    assert!(text.starts_with("accuracy "), "{text}");

    let text = ok(&["stats", "--a", s(&r1), "--b", s(&r2), "--unit", "fold", "--out", s(&d.join("c.json"))]);
    assert!(text.contains("Kruskal-Wallis") && text.contains("permutation"), "{text}");
    assert!(text.contains("no significant difference"), "{text}");
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("c.json")).unwrap()).unwrap();
    assert_eq!(c["comparison"]["permutation"]["p"], 1.0);

    // Per-subject pairing needs equal subject counts.
    let data2 = tiny_synth(d, "s2.eegt", 2, 10.0);
    let r3 = d.join("r3.json");
    let mut args = vec!["train", "--data", s(&data), "--data", s(&data2), "--out", s(&r3)];
    args.extend(common);
    ok(&args);
    assert_eq!(eegattn(&["stats", "--a", s(&r1), "--b", s(&r3)]).status.code(), Some(3));
}

#[test]
fn describe_prints_parameter_count() {
    let text = ok(&["describe"]);
    assert!(text.contains("parameters: 20357"), "{text}");
    assert!(text.contains("temporal_conv"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&ok(&["describe", "--json"])).unwrap();
    assert_eq!(json["param_count"], 20357);
}

#[test]
fn gradcheck_single_seed() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("g.json");
    let text = ok(&["gradcheck", "--seeds", "1", "--out", s(&rep)]);
    assert!(text.contains("model+loss"), "{text}");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    // An impossible tolerance fails with the numeric exit code.
    assert_eq!(eegattn(&["gradcheck", "--seeds", "1", "--tol", "0"]).status.code(), Some(4));
}
