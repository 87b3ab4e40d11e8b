//! The whole chain through the command-line front end: generate a
//! bundle, then `report` it into one directory.

use materiel_pulse::cli::run_with_args;

fn main() {
    let root = std::env::temp_dir().join("materiel-pulse-report");
    let input = root.join("input");
    let output = root.join("output");
    let s = |p: &std::path::Path| p.display().to_string();

    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    let code = run_with_args(
        [
            "materiel-pulse",
            "simgen",
            "--seed",
            "11",
            "--out-dir",
            &s(&input),
        ],
        &mut stdout,
        &mut stderr,
    );
    assert_eq!(code, 0);

    let code = run_with_args(
        [
            "materiel-pulse",
            "report",
            "--seed",
            "11",
            "--reps",
            "200",
            "--posts",
            &s(&input.join("posts.jsonl")),
            "--detections",
            &s(&input.join("detections.csv")),
            "--annotations",
            &s(&input.join("annotations.csv")),
            "--events",
            &s(&input.join("events.csv")),
            "--out-dir",
            &s(&output),
        ],
        &mut stdout,
        &mut stderr,
    );
    std::process::exit(code);
}
