mod common;

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn stepup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepup"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn invalid_flags_exit_two() {
    for args in [
        vec!["cutoffs", "--k", "3", "--nu", "3", "--seed", "1"],
        vec![
            "cutoffs", "--k", "15", "--nu", "7", "--alpha", "0", "--seed", "1",
        ],
        vec!["cutoffs", "--k", "15", "--nu", "7", "--method", "sus"],
        vec![
            "cutoffs", "--k", "15", "--nu", "7", "--seed", "1", "--method", "lenth",
        ],
        vec!["simulate", "--case", "C1", "--trials", "100"],
        vec!["frobnicate"],
    ] {
        assert_eq!(stepup(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn cutoffs_then_analyze() {
    let dir = tempdir().unwrap();
    let file = dir.path().join("cutoffs.csv");
    let o = stepup(&[
        "cutoffs",
        "--k",
        "15",
        "--nu",
        "7",
        "--method",
        "sus",
        "--seed",
        "3",
        "--out",
        p(&file),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().nth(2).unwrap().trim_start().starts_with("8"));

    let est = common::fixture("filtration_estimates.csv");
    let o = stepup(&["analyze", "--estimates", p(&est), "--cutoffs", p(&file)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("5 active effects: [C, D, AD, AC, A]"),
        "{text}"
    );
    assert!(text.contains("20.0"));

    let o = stepup(&[
        "analyze",
        "--estimates",
        p(&est),
        "--cutoffs",
        p(&file),
        "--method",
        "suf",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let toy = common::fixture("toy_design.csv");
    let o = stepup(&["analyze", "--design", p(&toy), "--cutoffs", p(&file)]);
    assert_eq!(o.status.code(), Some(2), "dimension mismatch");
}

#[test]
fn analyze_solves_from_flags() {
    let est = common::fixture("filtration_estimates.csv");
    let o = stepup(&[
        "analyze",
        "--estimates",
        p(&est),
        "--method",
        "suf",
        "--nu",
        "7",
        "--seed",
        "2",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("4 active effects: [D, AD, AC, A]"));
    let o = stepup(&[
        "analyze",
        "--estimates",
        p(&est),
        "--method",
        "suf",
        "--nu",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(2), "missing seed");
}

#[test]
fn analyze_zero_estimates() {
    let dir = tempdir().unwrap();
    let file = dir.path().join("zeros.csv");
    let body: String = (1..=15).map(|i| format!("E{i},0\n")).collect();
    std::fs::write(&file, format!("label,estimate\n{body}")).unwrap();
    let o = stepup(&[
        "analyze",
        "--estimates",
        p(&file),
        "--nu",
        "7",
        "--seed",
        "1",
        "--reps",
        "20000",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 active effects: []"));
}

#[test]
fn effects_of_toy_design() {
    let o = stepup(&["effects", "--design", p(&common::fixture("toy_design.csv"))]);
    assert!(o.status.success());
    let est = stepup::ingest::parse_estimates_from(o.stdout.as_slice(), "stdout").unwrap();
    assert_eq!(est.values(), &[1.0, 0.0, 0.0]);
    assert_eq!(est.labels(), &["A", "B", "AB"]);
}

#[test]
fn simulate_and_plot() {
    let dir = tempdir().unwrap();
    let results = dir.path().join("results.csv");
    let svg = dir.path().join("power.svg");
    let args = [
        "simulate",
        "--case",
        "C1",
        "--method",
        "suf,sus",
        "--trials",
        "2000",
        "--seed",
        "1",
        "--reps",
        "50000",
        "--out",
        p(&results),
    ];
    assert!(stepup(&args).status.success());
    let first = std::fs::read(&results).unwrap();
    assert!(stepup(&args).status.success());
    assert_eq!(first, std::fs::read(&results).unwrap());

    let rows = stepup::ingest::read_results(&results).unwrap();
    assert_eq!(rows.len(), 5 * 2 * 4);
    assert!(
        rows.iter().any(|r| r.value.is_none()),
        "power at s = 0 is NA"
    );

    let o = stepup(&[
        "plot",
        "--results",
        p(&results),
        "--metric",
        "power",
        "--out",
        p(&svg),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.matches("<polyline").count() == 2);
    assert_eq!(
        stepup(&["plot", "--results", p(&results), "--metric", "nope"])
            .status
            .code(),
        Some(2)
    );
}
