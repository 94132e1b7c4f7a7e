use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpsketch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sketch(stream: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sketch", s(stream), "-o", s(out), "--n", "1024", "--seed", "5"];
    args.extend_from_slice(extra);
    run(&args)
}

fn stream_text(lo: u64, hi: u64) -> String {
    (lo..hi).map(|i| format!("{} {}\n", (i * 37) % 1024, (i % 11) as i64 - 5)).collect()
}

#[test]
fn empty_stream_estimates_zero() {
    let dir = TempDir::new().unwrap();
    let stream = write(&dir, "empty.txt", "# nothing here\n");
    let sk = dir.path().join("empty.fps");
    assert!(sketch(&stream, &sk, &[]).status.success());
    let o = run(&["estimate", s(&sk)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0");
}

#[test]
fn split_and_merge_matches_whole_stream() {
    let dir = TempDir::new().unwrap();
    let (a, b, whole) = (
        write(&dir, "a.txt", &stream_text(0, 600)),
        write(&dir, "b.txt", &stream_text(600, 1500)),
        write(&dir, "whole.txt", &stream_text(0, 1500)),
    );
    let (sa, sb, sw) = (dir.path().join("a.fps"), dir.path().join("b.fps"), dir.path().join("w.fps"));
    for (src, dst) in [(&a, &sa), (&b, &sb), (&whole, &sw)] {
        assert!(sketch(src, dst, &[]).status.success());
    }
    let merged = run(&["estimate", s(&sa), s(&sb)]);
    let single = run(&["estimate", s(&sw)]);
    assert!(merged.status.success() && single.status.success());
    assert_eq!(stdout(&merged), stdout(&single));
    assert!(stdout(&single).parse::<f64>().unwrap() > 0.0);
}

#[test]
fn exact_f2_two_pass() {
    let dir = TempDir::new().unwrap();
    let stream = write(&dir, "s.txt", "3 2\n3 -1\n10 4\n");
    let sk = dir.path().join("s.fps");
    assert!(sketch(&stream, &sk, &["--exact-f2"]).status.success());
    let missing = run(&["estimate", s(&sk)]);
    assert_eq!(missing.status.code(), Some(2));
    let o = run(&["estimate", s(&sk), "--exact-f2", "--stream", s(&stream)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "65");
    let json = run(&["estimate", s(&sk), "--stream", s(&stream), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["diagnostics"]["f2_hat"], 17.0);
    assert_eq!(v["estimate"], 65.0);
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = TempDir::new().unwrap();
    let stream = write(&dir, "bad.txt", "1 2\n# fine\n3 x\n");
    let o = sketch(&stream, &dir.path().join("bad.fps"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let out_of_range = write(&dir, "oor.txt", "1 2\n5000 1\n");
    let o = sketch(&out_of_range, &dir.path().join("oor.fps"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn sketch_file_round_trips_and_rejects_corruption() {
    let dir = TempDir::new().unwrap();
    let stream = write(&dir, "s.txt", &stream_text(0, 400));
    let sk = dir.path().join("s.fps");
    assert!(sketch(&stream, &sk, &[]).status.success());
    let bytes = std::fs::read(&sk).unwrap();
    let back = fpsketch::FpSketch64::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes);
    let corrupt = dir.path().join("c.fps");
    std::fs::write(&corrupt, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(run(&["estimate", s(&corrupt)]).status.code(), Some(6));
    let other = dir.path().join("o.fps");
    assert!(run(&["sketch", s(&stream), "-o", s(&other), "--n", "1024", "--seed", "6"]).status.success());
    assert_eq!(run(&["estimate", s(&sk), s(&other)]).status.code(), Some(6));
}

#[test]
fn exit_codes_for_bad_config_and_io() {
    let dir = TempDir::new().unwrap();
    let stream = write(&dir, "s.txt", "1 1\n");
    let o = run(&["sketch", s(&stream), "-o", s(&dir.path().join("x")), "--n", "1024", "--p", "2"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p <= 2"));
    assert_eq!(run(&["estimate", s(&dir.path().join("missing.fps"))]).status.code(), Some(1));
    assert_eq!(run(&["sketch"]).status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&["bench", "--n", "1024", "--trials", "4", "--parallelism", "2", "--csv", s(&csv), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stats"]["trials"], 4);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
}

#[test]
fn lbexp_reports_advantage() {
    let o = run(&["lbexp", "--r", "128", "--trials", "200", "--norm-draws", "500", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["advantage"].as_f64().unwrap() > 0.5);
}
