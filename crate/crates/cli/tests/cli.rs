//! Command-line behavior: outputs, run directories and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use evipath::toy::Bundle;

fn evipath(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evipath"))
        .current_dir(cwd)
        .args(args)
        .env_remove("EVIPATH_GENERATE_URL")
        .env_remove("EVIPATH_EMBED_URL")
        .output()
        .unwrap()
}

fn setup() -> (tempfile::TempDir, Bundle) {
    let dir = tempfile::tempdir().unwrap();
    let bundle = evipath::toy::write_bundle(&dir.path().join("data")).unwrap();
    (dir, bundle)
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tau_sweep_writes_eleven_monotone_rows() {
    let (dir, b) = setup();
    let run = dir.path().join("run");
    let o = evipath(
        dir.path(),
        &["eval", "-c", &s(&b.eval_config), "--corpus", &s(&b.eval_corpus), "--tau-sweep", "0.0:1.0:0.1", "--run-dir", &s(&run)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(run.join("tau_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,p_ehr"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, p) = l.split_once(',').unwrap();
            (t.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1), "{rows:?}");
    assert!(run.join("report.json").exists());
    assert!(run.join("config.toml").exists());
    assert!(stdout(&o).contains("F-EHR"));
}

#[test]
fn corpus_without_features_exits_with_data_error() {
    let (dir, b) = setup();
    let corpus = dir.path().join("empty.jsonl");
    std::fs::write(
        &corpus,
        "{\"user\": \"hana\", \"item\": \"circe\", \"explanation\": \"A fine read.\"}\n\
         {\"user\": \"sami\", \"item\": \"dune\", \"explanation\": \"Worth it.\"}\n",
    )
    .unwrap();
    let o = evipath(dir.path(), &["eval", "-c", &s(&b.eval_config), "--corpus", &s(&corpus), "--run-dir", "r"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains('2') && err.contains("unscoreable"), "{err}");
}

#[test]
fn dump_prompt_skips_generation() {
    let (dir, b) = setup();
    let run = dir.path().join("run");
    let o = evipath(
        dir.path(),
        &["explain", "-c", &s(&b.toy_config), "--user", "alice", "--target", "eleanor_oliphant", "--dump-prompt", "--run-dir", &s(&run)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let path = run.join("prompts").join("alice__eleanor_oliphant.txt");
    assert_eq!(stdout(&o).trim(), s(&path));
    let prompt = std::fs::read_to_string(&path).unwrap();
    assert!(prompt.starts_with("### Instruction"));
    assert!(prompt.contains("### Knowledge Evidence"));
    assert!(!run.join("explanations.jsonl").exists());
}

#[test]
fn explain_writes_provenance() {
    let (dir, b) = setup();
    let run = dir.path().join("run");
    let o = evipath(
        dir.path(),
        &["explain", "-c", &s(&b.toy_config), "--user", "alice", "--target", "eleanor_oliphant", "--run-dir", &s(&run)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("alice\teleanor_oliphant\tRecommended for its "));
    let line = std::fs::read_to_string(run.join("explanations.jsonl")).unwrap();
    let record: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(record["backend"], "stub");
    assert_eq!(record["evidence"].as_array().unwrap().len(), 5);
    assert_eq!(record["decoding"]["max_tokens"], 128);
    assert!(run.join("prompts").join("alice__eleanor_oliphant.txt").exists());
}

#[test]
fn no_kg_explanations_are_generic() {
    let (dir, b) = setup();
    let run = dir.path().join("run");
    let o = evipath(dir.path(), &["explain", "-c", &s(&b.toy_config), "--no-kg", "--run-dir", &s(&run)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(run.join("explanations.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["explanation"], evipath::explain::GENERIC_EXPLANATION);
        assert!(v["evidence"].as_array().unwrap().is_empty());
    }
}

#[test]
fn retrieve_only_one_hop() {
    let (dir, b) = setup();
    let o = evipath(
        dir.path(),
        &["retrieve", "-c", &s(&b.toy_config), "--only-1hop", "--user", "bob", "--target", "station_eleven", "--run-dir", "r"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let paths = v["paths"].as_array().unwrap();
    assert!(!paths.is_empty());
    assert!(paths.iter().all(|p| p["hops"] == 1), "{v}");
}

#[test]
fn default_run_directory_is_timestamp_and_hash() {
    let (dir, b) = setup();
    for _ in 0..2 {
        let o = evipath(dir.path(), &["index", "-c", &s(&b.toy_config)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("runs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 2, "{names:?}");
    for n in &names {
        let (stamp, rest) = n.split_once('-').unwrap();
        assert_eq!(stamp.len(), 16, "{n}");
        assert!(stamp.ends_with('Z') && stamp.as_bytes()[8] == b'T', "{n}");
        assert!(rest[..12].chars().all(|c| c.is_ascii_hexdigit()), "{n}");
        assert!(dir.path().join("runs").join(n).join("index").join("manifest.json").exists());
    }
}

#[test]
fn exit_codes() {
    let (dir, b) = setup();
    let cwd = dir.path();
    assert_eq!(evipath(cwd, &["--help"]).status.code(), Some(0));
    assert_eq!(evipath(cwd, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(evipath(cwd, &["retrieve", "-c", &s(&b.toy_config), "--user", "alice"]).status.code(), Some(1));
    assert_eq!(evipath(cwd, &["retrieve", "--gamma", "0.5"]).status.code(), Some(1));

    let missing = evipath(cwd, &["index", "-c", "nope.toml"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope.toml"));

    let bad_gamma = evipath(cwd, &["retrieve", "-c", &s(&b.toy_config), "--gamma", "1.5", "--run-dir", "r"]);
    assert_eq!(bad_gamma.status.code(), Some(2));
    assert!(stderr(&bad_gamma).contains("gamma"));

    let unknown_user = evipath(
        cwd,
        &["retrieve", "-c", &s(&b.toy_config), "--user", "zed", "--target", "dune", "--run-dir", "r"],
    );
    assert_eq!(unknown_user.status.code(), Some(2));

    let unreachable = Command::new(env!("CARGO_BIN_EXE_evipath"))
        .current_dir(cwd)
        .args(["explain", "-c", &s(&b.toy_config), "--backend", "http", "--run-dir", "r2"])
        .env("EVIPATH_GENERATE_URL", "http://127.0.0.1:9/generate")
        .output()
        .unwrap();
    assert_eq!(unreachable.status.code(), Some(3), "{}", stderr(&unreachable));
}

#[test]
fn demo_runs_offline() {
    let (dir, _) = setup();
    let o = evipath(dir.path(), &["demo", "--run-dir", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = dir.path().join("d");
    for f in ["config.toml", "retrieval.jsonl", "explanations.jsonl", "report.json", "index/manifest.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("P-EHR"));
}
