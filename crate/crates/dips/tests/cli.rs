use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dips(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dips"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn small_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(config("fig2.toml"))
        .unwrap()
        .replace("max_blocks = 600", "max_blocks = 250");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_verify_closes_the_loop() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    for format in ["csv", "jsonl"] {
        let out = tmp.path().join(format);
        let run = dips(&["--out-dir", s(&out), "--format", format, "simulate", s(&cfg)]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        let records = out.join(format!("records.{format}"));
        let graphs = out.join("graphs.txt");
        assert_eq!(dips(&["verify-chain", s(&records), s(&graphs)]).status.code(), Some(0));
        let replayed = dips(&["verify-chain", s(&records), s(&graphs), "--manifest", s(&out)]);
        assert_eq!(replayed.status.code(), Some(0));
        assert!(String::from_utf8_lossy(&replayed.stdout).contains("difficulties replayed"));
        assert_eq!(
            dips(&["verify-chain", s(&records), s(&graphs), "--config", s(&cfg)])
                .status
                .code(),
            Some(0)
        );
    }
}

#[test]
fn tampered_records_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("run");
    assert!(dips(&["--out-dir", s(&out), "simulate", s(&cfg)]).status.success());
    let records = out.join("records.csv");
    let text = fs::read_to_string(&records).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let i = lines.iter().position(|l| l.contains(",solution,")).unwrap();
    let mut fields: Vec<String> = lines[i].split(',').map(String::from).collect();
    fields[6] = "30".into();
    lines[i] = fields.join(",");
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    assert_eq!(
        dips(&["verify-chain", s(&bad), s(&out.join("graphs.txt"))])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_eta = tmp.path().join("eta.toml");
    fs::write(&bad_eta, "eta = 1.5\n").unwrap();
    let unknown = tmp.path().join("unknown.toml");
    fs::write(&unknown, "policy = \"v2\"\nblock_size = 3\n").unwrap();
    let out = tmp.path().join("out");
    for path in [&bad_eta, &unknown, &tmp.path().join("missing.toml")] {
        assert_eq!(
            dips(&["--out-dir", s(&out), "simulate", s(path)]).status.code(),
            Some(2)
        );
    }
    // Bitcoin policy cannot run the block growth experiment.
    let bitcoin = config("baseline.toml");
    assert_eq!(
        dips(&["--out-dir", s(&out), "fig2", s(&bitcoin)]).status.code(),
        Some(2)
    );
    assert_eq!(dips(&["simulate"]).status.code(), Some(2));
}

#[test]
fn replay_reproduces_outputs_and_seed_override_applies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let first = tmp.path().join("first");
    assert!(dips(&["--seed", "99", "--out-dir", s(&first), "fig2", s(&cfg)])
        .status
        .success());
    let manifest = fs::read_to_string(first.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 99"));
    assert!(manifest.contains("seed = 99"));
    let again = tmp.path().join("again");
    let replay = dips(&[
        "--out-dir",
        s(&again),
        "replay",
        s(&first.join("manifest.json")),
        "--check",
    ]);
    assert_eq!(
        replay.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );
    assert_eq!(
        fs::read(first.join("records.csv")).unwrap(),
        fs::read(again.join("records.csv")).unwrap()
    );
}

#[test]
fn selftest_passes() {
    let run = dips(&["selftest", "--graphs", "60"]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("60/60"));
}
