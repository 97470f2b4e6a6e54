use std::path::PathBuf;
use std::process::{Command, Output};

fn snip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snip")).args(args).output().expect("binary runs")
}

fn diamond() -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", "diamond.json"].iter().collect();
    p.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_diamond_every_algorithm() {
    for alg in ["def", "cdef", "benders", "path"] {
        let out = snip(&["solve", "--alg", alg, "--instance", &diamond()]);
        assert_eq!(out.status.code(), Some(0), "{alg}: {}", String::from_utf8_lossy(&out.stderr));
        let row = stdout(&out);
        let fields: Vec<&str> = row.trim_end().split('\t').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(&fields[..3], &["diamond", alg, "optimal"]);
        let obj: f64 = fields[3].parse().unwrap();
        assert!((obj - 0.63).abs() < 1e-9, "{alg}: {obj}");
    }
}

#[test]
fn solve_header_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("row.tsv");
    let out = snip(&[
        "solve", "--alg", "path", "--gap", "1e-4", "--frac-sigma", "both", "--instance", &diamond(),
        "--header", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    assert!(text.starts_with("instance\talg\tstatus\t"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn bad_flags_and_inputs_exit_one() {
    assert_eq!(snip(&["solve", "--alg", "simplex", "--instance", &diamond()]).status.code(), Some(1));
    assert_eq!(snip(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(snip(&["solve", "--alg", "def", "--instance", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(snip(&["generate", "--rows", "1", "--cols", "4"]).status.code(), Some(1));
    assert_eq!(snip(&["--help"]).status.code(), Some(0));
}

#[test]
fn time_limit_zero_reports_limit() {
    let out = snip(&["solve", "--alg", "cdef", "--time-limit", "0", "--instance", &diamond()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("\ttime_limit\t"));
}

#[test]
fn generate_is_reproducible() {
    let args = ["generate", "--rows", "4", "--cols", "4", "--scenarios", "3", "--seed", "9"];
    let a = snip(&args);
    let b = snip(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = snip(&["generate", "--rows", "4", "--cols", "4", "--scenarios", "3", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn generate_zero_regime() {
    let out = snip(&["generate", "--rows", "3", "--cols", "3", "--regime", "zero"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"q\": 0.0"));
    assert!(!text.lines().any(|l| l.contains("\"q\"") && !l.contains("\"q\": 0.0")));
}

#[test]
fn bench_agreement_and_budget_sweep() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(diamond(), dir.path().join("diamond.json")).unwrap();
    let gen = snip(&[
        "generate", "--rows", "4", "--cols", "4", "--fraction", "0.25", "--scenarios", "4",
        "--seed", "3", "--out", dir.path().join("grid.json").to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));

    let pattern = format!("{}/*.json", dir.path().display());
    let out = snip(&["bench", "--instances", &pattern, "--budgets", "0,1,2", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 3 * 4);
    assert!(rows.iter().all(|r| r.split('\t').nth(2) == Some("optimal")));
    let diamond_b1: Vec<f64> = rows
        .iter()
        .filter(|r| r.starts_with("diamond@b=1\t"))
        .map(|r| r.split('\t').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(diamond_b1.len(), 4);
    assert!(diamond_b1.iter().all(|v| (v - 0.63).abs() < 1e-9));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn bench_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = format!("{}/*.json", dir.path().display());
    let empty = snip(&["bench", "--instances", &pattern]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(stdout(&empty).lines().count(), 1);

    std::fs::copy(diamond(), dir.path().join("diamond.json")).unwrap();
    let limited = snip(&["bench", "--instances", &pattern, "--time-limit", "0"]);
    assert_eq!(limited.status.code(), Some(0));
    let text = stdout(&limited);
    assert_eq!(text.lines().skip(1).count(), 4);
    assert!(text.lines().skip(1).all(|r| r.split('\t').nth(2) == Some("time_limit")));
}
