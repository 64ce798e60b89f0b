use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use markov_adiabatic::format::{parse_distribution, parse_matrix};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_markov-adiabatic"));
    for var in [
        "MARKOV_ADIABATIC_ROW_TOL",
        "MARKOV_ADIABATIC_REVERSIBLE_TOL",
        "MARKOV_ADIABATIC_SERIES_TOL",
        "MARKOV_ADIABATIC_RATE_STEP",
        "MARKOV_ADIABATIC_MIXING_RESOLUTION",
        "MARKOV_ADIABATIC_MIXING_CAP",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

/// `key: value` lines, with or without a leading `# `.
fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .map(|l| l.trim_start_matches("# "))
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .to_string()
}

fn number(text: &str, key: &str) -> f64 {
    summary_value(text, key).parse().unwrap()
}

/// Parses CSV text, skipping `#` summary lines; returns header and rows.
fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|v| v.parse::<f64>().unwrap())
                .collect()
        })
        .collect();
    (header, rows)
}

fn fixtures(dir: &Path) {
    write(dir, "p.txt", "2\n0.9 0.1\n0.1 0.9\n");
    write(dir, "flat.txt", "2\n0.5 0.5\n0.5 0.5\n");
    write(dir, "h.txt", "2\n-1 -1\n-1 -1\n");
    write(dir, "q.txt", "2\n-1 1\n1 -1\n");
    write(dir, "q2.txt", "2\n-2 2\n0.5 -0.5\n");
}

#[test]
fn analyze_reports_the_two_state_example() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = run(
        dir.path(),
        &["analyze", "--chain", "p.txt", "--eps", "0.25"],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((number(&text, "gap") - 0.2).abs() < 1e-12);
    assert!((number(&text, "relaxation_time") - 5.0).abs() < 1e-10);
    assert_eq!(summary_value(&text, "t_mix"), "4");
    assert!((number(&text, "t_mix_lower") - 2.7726).abs() < 1e-3);
    assert!((number(&text, "t_mix_upper") - 10.397).abs() < 1e-3);
    assert_eq!(summary_value(&text, "reversible"), "true");
}

#[test]
fn convert_h2p_writes_the_chain_and_stationary_law() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = run(
        dir.path(),
        &[
            "convert",
            "--direction",
            "h2p",
            "--input",
            "h.txt",
            "-o",
            "p_out.txt",
            "--stationary-output",
            "pi.txt",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let p = parse_matrix(&fs::read_to_string(dir.path().join("p_out.txt")).unwrap()).unwrap();
    let expected = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
    for (a, b) in p.transpose().iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
    let pi = parse_distribution(&fs::read_to_string(dir.path().join("pi.txt")).unwrap()).unwrap();
    for w in pi {
        assert!((w - 0.5).abs() < 1e-12);
    }
    assert!((number(&stdout(&out), "chain_gap") - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn convert_round_trips_through_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let to_p = run(
        dir.path(),
        &[
            "convert",
            "--direction",
            "h2p",
            "--input",
            "h.txt",
            "-o",
            "p1.txt",
        ],
    );
    assert!(to_p.status.success());
    let ground = summary_value(&stdout(&to_p), "ground_energy");
    let back = run(
        dir.path(),
        &[
            "convert",
            "--direction",
            "p2h",
            "--input",
            "p1.txt",
            "--ground-energy",
            &ground,
            "-o",
            "h1.txt",
        ],
    );
    assert!(
        back.status.success(),
        "{}",
        String::from_utf8_lossy(&back.stderr)
    );
    let h = parse_matrix(&fs::read_to_string(dir.path().join("h1.txt")).unwrap()).unwrap();
    for v in h.iter() {
        assert!((v + 1.0).abs() < 1e-12);
    }
}

#[test]
fn matrix_files_are_reparsed_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "analyze",
            "--random",
            "6",
            "--seed",
            "8",
            "--write-chain",
            "c.txt",
        ],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("c.txt")).unwrap();
    let m = parse_matrix(&text).unwrap();
    assert_eq!(markov_adiabatic::format::write_matrix(&m), text);
}

#[test]
fn discrete_scan_emits_a_parseable_curve() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = run(
        dir.path(),
        &[
            "adiabatic-discrete",
            "--initial",
            "flat.txt",
            "--final",
            "p.txt",
            "--eps",
            "0.25",
            "--cap",
            "100",
        ],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["T", "error"]);
    let measured = number(&text, "measured_time");
    assert_eq!(rows.last().unwrap()[0], measured);
    assert!(rows.last().unwrap()[1] <= 0.25);
    assert!(rows[..rows.len() - 1].iter().all(|r| r[1] > 0.25));
    assert!(measured <= number(&text, "t_bound"));
    assert_eq!(
        number(&text, "t_bound"),
        number(&text, "K") * number(&text, "t_mix_half")
    );
}

#[test]
fn continuous_scan_writes_csv_atomically_and_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = run(
        dir.path(),
        &[
            "adiabatic-continuous",
            "--initial",
            "q2.txt",
            "--final",
            "q.txt",
            "--eps",
            "0.25",
            "-o",
            "curve.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = stdout(&out);
    let (header, rows) = read_csv(&fs::read_to_string(dir.path().join("curve.csv")).unwrap());
    assert_eq!(header, ["T", "error"]);
    assert!(rows.last().unwrap()[1] <= 0.25);
    assert!(number(&summary, "measured_time") <= number(&summary, "t_bound"));
    // no temporary files left behind
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 6, "{names:?}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "adiabatic-continuous",
        "--random",
        "3",
        "--seed",
        "17",
        "--eps",
        "0.2",
    ];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("ChaCha8Rng seed 17"));
    let c = run(
        dir.path(),
        &[
            "adiabatic-continuous",
            "--random",
            "3",
            "--seed",
            "18",
            "--eps",
            "0.2",
        ],
    );
    assert_ne!(a.stdout, c.stdout);

    let d = run(
        dir.path(),
        &[
            "adiabatic-discrete",
            "--random",
            "4",
            "--seed",
            "5",
            "--eps",
            "0.1",
        ],
    );
    let e = run(
        dir.path(),
        &[
            "adiabatic-discrete",
            "--random",
            "4",
            "--seed",
            "5",
            "--eps",
            "0.1",
        ],
    );
    assert!(d.status.success());
    assert_eq!(d.stdout, e.stdout);
}

#[test]
fn mix_curves_end_at_the_mixing_time() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = run(dir.path(), &["mix", "--chain", "p.txt", "--eps", "0.25"]);
    let text = stdout(&out);
    let (header, rows) = read_csv(&text);
    assert_eq!(header, ["t", "distance"]);
    assert_eq!(rows.len(), 5);
    assert!((rows[1][1] - 0.4).abs() < 1e-12);

    let out = run(
        dir.path(),
        &[
            "mix",
            "--generator",
            "q.txt",
            "--eps",
            "0.25",
            "--mixing-resolution",
            "0.001",
        ],
    );
    let t_mix = number(&stdout(&out), "t_mix");
    // d(t) = e^{−2t}/2 reaches 1/4 at ln 2 / 2
    assert!(t_mix >= 2f64.ln() / 2.0 && t_mix < 2f64.ln() / 2.0 + 0.001);
}

#[test]
fn ising_models_are_read_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a.toml",
        "n = 3\nbeta = 0.2\nJ = [[0, 1, 1.0], [1, 2, 1.0]]\n",
    );
    write(
        dir.path(),
        "b.toml",
        "n = 3\nbeta = 1.0\nJ = [[0, 1, 1.0], [1, 2, 1.0]]\n",
    );
    let out = run(
        dir.path(),
        &[
            "ising", "--init", "a.toml", "--final", "b.toml", "--eps", "0.25",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert_eq!(summary_value(&text, "states"), "8");
    let gibbs: Vec<f64> = summary_value(&text, "gibbs_final")
        .split(' ')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((gibbs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(number(&text, "measured_time") <= number(&text, "t_bound"));
}

#[test]
fn exit_codes_name_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    write(dir.path(), "bad.txt", "2\n0.5 0.6\n0.5 0.5\n");
    write(dir.path(), "cycle.txt", "2\n0 1\n1 0\n");

    let missing = run(dir.path(), &["analyze", "--chain", "missing.txt"]);
    assert_eq!(missing.status.code(), Some(1));

    let usage = run(dir.path(), &["analyze", "--chain", "p.txt", "--eps", "1.5"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(run(dir.path(), &["analyze"]).status.code(), Some(2));

    let invalid = run(dir.path(), &["analyze", "--chain", "bad.txt"]);
    assert_eq!(invalid.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("row 0"));

    let periodic = run(dir.path(), &["analyze", "--chain", "cycle.txt"]);
    assert_eq!(periodic.status.code(), Some(3));

    let capped = run(
        dir.path(),
        &[
            "adiabatic-discrete",
            "--initial",
            "flat.txt",
            "--final",
            "p.txt",
            "--eps",
            "0.01",
            "--cap",
            "3",
        ],
    );
    assert_eq!(capped.status.code(), Some(4));
    let (_, rows) = read_csv(&stdout(&capped));
    assert_eq!(rows.len(), 3);
}

#[test]
fn environment_overrides_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "loose.txt", "2\n0.9 0.100001\n0.1 0.9\n");
    let strict = run(dir.path(), &["analyze", "--chain", "loose.txt"]);
    assert_eq!(strict.status.code(), Some(3));
    let relaxed = bin()
        .current_dir(dir.path())
        .env("MARKOV_ADIABATIC_ROW_TOL", "1e-5")
        .args(["analyze", "--chain", "loose.txt"])
        .output()
        .unwrap();
    assert!(
        relaxed.status.success(),
        "{}",
        String::from_utf8_lossy(&relaxed.stderr)
    );
}

#[test]
fn suite_reports_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["suite", "--only", "7,8", "-o", "suite.csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("PASS criterion 7")));
    assert!(text.lines().any(|l| l.starts_with("PASS criterion 8")));
    let csv = fs::read_to_string(dir.path().join("suite.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(
        run(dir.path(), &["suite", "--only", "9"]).status.code(),
        Some(2)
    );
}
