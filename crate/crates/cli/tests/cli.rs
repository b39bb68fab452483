use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lawcast::util::sha256_hex;
use serde_json::Value;

const SMALL: &[&str] = &[
    "--synth.bills_per_congress=60",
    "--synth.congress_end=106",
    "--synth.house_rate=0.2",
    "--synth.senate_rate=0.25",
];

fn lawcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lawcast")).args(args).output().unwrap()
}

fn synth(out: &Path, extra: &[&str]) -> Output {
    let out_arg = format!("--out={}", out.display());
    let mut args = vec!["synth", out_arg.as_str()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    lawcast(&args)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn synth_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(synth(&a, &[]).status.success());
    assert!(synth(&b, &[]).status.success());
    assert!(synth(&c, &["--seed=2"]).status.success());
    for f in ["bills.jsonl", "committees.csv", "composition.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(
        fs::read(a.join("bills.jsonl")).unwrap(),
        fs::read(c.join("bills.jsonl")).unwrap()
    );
}

#[test]
fn manifest_records_config_and_output_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert!(synth(&out, &["--seed=7"]).status.success());
    let m = manifest(&out);
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["synth.bills_per_congress"], "60");
    assert_eq!(m["config"]["forest.n_trees"], "300");
    let bills = fs::read(out.join("bills.jsonl")).unwrap();
    assert_eq!(m["outputs"]["bills.jsonl"], sha256_hex(&bills).as_str());
    assert!(m["wall_time_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn a_manifest_reruns_the_same_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert!(synth(&out, &["--seed=3"]).status.success());
    let first = fs::read(out.join("bills.jsonl")).unwrap();
    let saved = dir.path().join("saved.json");
    fs::copy(out.join("manifest.json"), &saved).unwrap();
    fs::remove_dir_all(&out).unwrap();
    let config_arg = format!("--config={}", saved.display());
    assert!(lawcast(&["synth", config_arg.as_str()]).status.success());
    assert_eq!(fs::read(out.join("bills.jsonl")).unwrap(), first);
}

#[test]
fn a_key_value_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# small corpus\nout = {}\nseed = 4\nsynth.bills_per_congress = 40\nsynth.congress_end = 105\n",
            out.display()
        ),
    )
    .unwrap();
    let config_arg = format!("--config={}", cfg.display());
    let o = lawcast(&["synth", config_arg.as_str(), "--seed=5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["synth.bills_per_congress"], "40");
}

#[test]
fn usage_and_validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out_arg = format!("--out={}", out.display());
    let cases: Vec<Vec<&str>> = vec![
        vec!["synth", out_arg.as_str(), "--no.such.key=1"],
        vec!["synth", out_arg.as_str(), "--seed=abc"],
        vec!["synth", out_arg.as_str(), "--synth.house_rate=1.5"],
        vec!["profile", out_arg.as_str(), "--bills=/nonexistent/bills.jsonl"],
        vec!["train", out_arg.as_str()],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = lawcast(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
    assert_eq!(lawcast(&["--help"]).status.code(), Some(0));
}

#[test]
fn insufficient_history_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    assert!(synth(&s, &["--synth.congress_end=105"]).status.success());
    let args = [
        "walkforward".to_string(),
        format!("--out={}", dir.path().join("w").display()),
        format!("--bills={}", s.join("bills.jsonl").display()),
        format!("--committees={}", s.join("committees.csv").display()),
        format!("--composition={}", s.join("composition.csv").display()),
    ];
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = lawcast(&args);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("first feasible test congress is 105"), "{err}");
}

#[test]
fn keys_lists_every_default() {
    let o = lawcast(&["keys"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("forest.n_trees = 300"));
    assert!(text.contains("sensitivity.replicates = 1000"));
}
