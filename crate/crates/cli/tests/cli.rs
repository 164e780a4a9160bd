use std::path::Path;
use std::process::{Command, Output};

fn qpatch(work: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpatch"))
        .args(args)
        .arg("--work-dir")
        .arg(work)
        .env("QPATCH_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn staged_run_matches_run_all() {
    let staged = tempfile::tempdir().unwrap();
    let w = staged.path();
    for args in [
        vec!["synth", "--synthetic-audio", "50"],
        vec!["features", "--synthetic-audio", "50"],
        vec!["kernel", "--kind", "quantum", "--synthetic-audio", "50"],
        vec!["train-eval", "--kind", "quantum", "--synthetic-audio", "50"],
    ] {
        let o = qpatch(w, &args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let all = tempfile::tempdir().unwrap();
    let o = qpatch(all.path(), &["run-all", "--synthetic-audio", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("quantum") && stdout(&o).contains("rbf"));
    for f in ["features.csv", "kernels/quantum_train.csv", "reports/quantum_report.json"] {
        assert_eq!(std::fs::read(w.join(f)).unwrap(), std::fs::read(all.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"synthetic_audio": 50, "seed": 5, "patch": {"k": 4}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = qpatch(dir.path(), &["synth", "--config", c]);
    assert!(o.status.success());
    let o = qpatch(dir.path(), &["features", "--config", c, "--k", "1"]);
    assert!(o.status.success());
    let header = std::fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert!(header.starts_with("id,label,split,x0,x1,x2,x3,tau0,f0\n"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    let missing = w.join("nowhere");
    let o = qpatch(w, &["synth", "--input-dir", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    assert_eq!(qpatch(w, &["synth"]).status.code(), Some(2), "no input at all");
    assert_eq!(qpatch(w, &["features"]).status.code(), Some(2), "no manifest");
    assert_eq!(qpatch(w, &["synth", "--synthetic-audio", "50", "--depth", "4"]).status.code(), Some(2));
    assert_eq!(qpatch(w, &["synth", "--synthetic-audio", "50", "--k", "3"]).status.code(), Some(2));

    let bad = w.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(qpatch(w, &["synth", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_qpatch"))
        .args(["synth", "--synthetic-audio", "50", "--work-dir"])
        .arg(w)
        .env("QPATCH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn skipped_utterance_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    assert!(qpatch(w, &["synth", "--synthetic-audio", "50"]).status.success());
    std::fs::write(w.join("spoof/utt_010_spoof.wav"), b"garbage").unwrap();
    let o = qpatch(w, &["features", "--synthetic-audio", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("utt_010_spoof"));
    assert!(w.join("features.csv").exists());
}
