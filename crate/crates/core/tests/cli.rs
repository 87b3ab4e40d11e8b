mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::bin;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .env_remove("MATERIEL_PULSE_VOCAB")
        .output()
        .unwrap()
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--quiet", "simgen", "--out-dir", "."]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(
        dir.path(),
        &[
            "--quiet",
            "series",
            "--posts",
            "posts.jsonl",
            "--detections",
            "detections.csv",
            "--events",
            "events.csv",
            "--out",
            "series.csv",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    dir
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["eval", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr(&out).starts_with("ERROR\tusage\t"));
}

#[test]
fn missing_input_exits_66() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "eval",
            "--detections",
            "nope.csv",
            "--annotations",
            "nope2.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(66));
}

#[test]
fn reversed_range_exits_2_and_writes_nothing() {
    let dir = fixtures();
    let out = run(
        dir.path(),
        &[
            "series",
            "--posts",
            "posts.jsonl",
            "--detections",
            "detections.csv",
            "--start",
            "2022-06-01",
            "--end",
            "2022-05-01",
            "--out",
            "bad.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn constant_column_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,a,b\n");
    for d in 1..=28 {
        text.push_str(&format!("2022-02-{d:02},1,{}\n", (d * 7 % 5) as f64));
    }
    fs::write(dir.path().join("s.csv"), text).unwrap();
    let out = run(
        dir.path(),
        &["var", "--series", "s.csv", "--columns", "a,b", "--lag", "1"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn posts_can_come_from_stdin() {
    let dir = fixtures();
    let posts = fs::read(dir.path().join("posts.jsonl")).unwrap();
    let mut child = Command::new(bin())
        .current_dir(dir.path())
        .args([
            "--quiet",
            "engagement",
            "--posts",
            "-",
            "--detections",
            "detections.csv",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&posts).unwrap();
    let piped = child.wait_with_output().unwrap();
    assert_eq!(piped.status.code(), Some(0));
    let direct = run(
        dir.path(),
        &[
            "--quiet",
            "engagement",
            "--posts",
            "posts.jsonl",
            "--detections",
            "detections.csv",
        ],
    );
    assert_eq!(piped.stdout, direct.stdout);
}

#[test]
fn vocabulary_comes_from_env_unless_flag_overrides() {
    let dir = fixtures();
    fs::write(dir.path().join("tiny.txt"), "tank\n").unwrap();
    let args = [
        "eval",
        "--detections",
        "detections.csv",
        "--annotations",
        "annotations.csv",
    ];
    let out = Command::new(bin())
        .current_dir(dir.path())
        .args(args)
        .env("MATERIEL_PULSE_VOCAB", "tiny.txt")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(
        dir.path().join("full.txt"),
        materiel_pulse::ingest::DEFAULT_LABELS.join("\n"),
    )
    .unwrap();
    let out = Command::new(bin())
        .current_dir(dir.path())
        .args(["--vocab", "full.txt"])
        .args(args)
        .env("MATERIEL_PULSE_VOCAB", "tiny.txt")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn granger_emits_one_row_per_lag_and_direction() {
    let dir = fixtures();
    let out = run(
        dir.path(),
        &[
            "--quiet",
            "granger",
            "--series",
            "series.csv",
            "--cause",
            "share:land mine",
            "--effect",
            "fatalities",
            "--both-directions",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 14);
    assert_eq!(
        rows.iter()
            .filter(|r| r.starts_with("share:land mine,fatalities,"))
            .count(),
        7
    );
}

#[test]
fn irf_svg_has_one_cell_per_cross_pair() {
    let dir = fixtures();
    let out = run(
        dir.path(),
        &[
            "--quiet",
            "irf",
            "--series",
            "series.csv",
            "--columns",
            "share:rpg,share:grenade,fatalities",
            "--reps",
            "100",
            "--out",
            "irf.csv",
            "--svg",
            "irf.svg",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let svg = fs::read_to_string(dir.path().join("irf.svg")).unwrap();
    assert_eq!(svg.matches("<g class=\"cell\"").count(), 4);
    let csv = fs::read_to_string(dir.path().join("irf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 11);
}

#[test]
fn report_is_reproducible_for_a_seed() {
    let dir = fixtures();
    let args = |o: &'static str| {
        vec![
            "--quiet",
            "--seed",
            "3",
            "report",
            "--posts",
            "posts.jsonl",
            "--detections",
            "detections.csv",
            "--annotations",
            "annotations.csv",
            "--events",
            "events.csv",
            "--reps",
            "100",
            "--out-dir",
            o,
        ]
    };
    for o in ["r1", "r2"] {
        let out = run(dir.path(), &args(o));
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("r1"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        let a = fs::read(dir.path().join("r1").join(&name)).unwrap();
        let b = fs::read(dir.path().join("r2").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}
