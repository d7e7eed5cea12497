use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thicklam")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn farey_neighbours_are_at_distance_one() {
    let o = run(&["graph", "dist", "--backend", "farey", "0/1", "1/0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1");
    let o = run(&["graph", "dist", "--backend", "tree", "ab", "aB"]);
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn markov_samples_are_byte_identical() {
    let a = run(&["markov", "sample", "--length", "40", "--seed", "7"]);
    let b = run(&["markov", "sample", "--length", "40", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["markov", "sample", "--length", "40", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn replay_detects_bit_flips() {
    let cert = scratch("sample-cert.json");
    let o = run(&["markov", "sample", "--length", "12", "--points", "9", "--cert", cert.to_str().unwrap()]);
    assert!(o.status.success());
    let ok = run(&["replay", cert.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let bytes = std::fs::read(&cert).unwrap();
    let at = bytes.windows(8).position(|w| w == b"\"digest\"").unwrap() + 14;
    let mut flipped = bytes.clone();
    flipped[at] ^= 0x01;
    let bad = scratch("sample-cert-flipped.json");
    std::fs::write(&bad, flipped).unwrap();
    let o = run(&["replay", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "integrity");
}

#[test]
fn errors_are_json_on_stderr() {
    let o = run(&["graph", "dist", "--backend", "farey", "x/0", "1/0"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"].is_string());
    let o = run(&["graph", "nonsense"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn vertical_finder_certificate_replays() {
    let cert = scratch("vertical.json");
    let o = run(&["flatsurf", "findvertical", "--plant", "1/3", "--cert", cert.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["s_star"], "1/3");
    assert_eq!(v["connection"]["hol"]["x"], "0");
    let r = run(&["replay", cert.to_str().unwrap()]);
    assert!(r.status.success());
    let out: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(out["rechecked"], true);
}

#[test]
fn short_expansion_harness_writes_csv() {
    let csv = scratch("expansion.csv");
    let o = run(&["flatsurf", "verify", "--samples", "5", "--t-max", "1", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,s,ratio,systole"));
    assert_eq!(text.lines().count(), 1 + 5 * 5);
}

#[test]
fn split_sequence_matches_euclid() {
    let o = run(&["track", "split", "13/8"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(v["word"], "RLRLRC");
}
