use std::path::Path;
use std::process::{Command, Output};

use graphbal::numerics::RandomStream;

fn graphbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphbal"))
        .args(args)
        .env_remove("GRAPHBAL_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_sample(path: &Path, n: usize) {
    let mut rng = RandomStream::new(4, 4);
    let mut s = String::from("x,y,arm\n");
    for i in 0..n {
        s.push_str(&format!(
            "{:.5},{:.5},{}\n",
            rng.standard_normal(),
            rng.standard_normal(),
            ["a", "b", "c"][i % 3]
        ));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn graph_subcommand_prints_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    write_sample(&csv, 12);
    let csv = csv.to_str().unwrap();
    let knn = stdout(&graphbal(&["graph", "--input", csv, "--group-column", "arm", "--k", "2"]));
    let mut lines = knn.lines();
    assert_eq!(lines.next(), Some("src,dst,weight"));
    assert_eq!(lines.count(), 24);
    let nbm = stdout(&graphbal(&["graph", "--input", csv, "--group-column", "arm", "--graph", "nbm"]));
    assert_eq!(nbm.lines().count(), 1 + 6);
    let path = stdout(&graphbal(&["graph", "--input", csv, "--group-column", "arm", "--graph", "path"]));
    assert_eq!(path.lines().count(), 1 + 11);
}

#[test]
fn oracle_mean_matches_library_moments() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    write_sample(&csv, 9);
    let out = stdout(&graphbal(&[
        "oracle", "--input", csv.to_str().unwrap(), "--group-column", "arm", "--k", "2",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["labelings"], 1680);
    // 18 arcs, each inside a given group of 3 w.p. (3/9)(2/8)
    for m in v["mean"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 18.0 / 12.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_writes_a_power_table() {
    let out = stdout(&graphbal(&[
        "simulate", "--kind", "location", "--delta", "0,0.5", "--d", "2", "--replicates", "4",
        "--methods", "knn,runs@wald", "--mc", "2000", "--perm-draws", "200", "--seed", "3",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[0].starts_with("scenario,"));
    assert!(lines.iter().any(|l| l.contains("runs:greedy_edge") && l.contains("wald")));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    write_sample(&csv, 12);
    let o = graphbal(&["test", "--input", csv.to_str().unwrap(), "--group-column", "treatment"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("treatment"));
    let missing = graphbal(&["test", "--input", "/nonexistent/file.csv"]);
    assert!(!missing.status.success());
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    write_sample(&csv, 30);
    let csv = csv.to_str().unwrap();
    let flag = stdout(&graphbal(&["test", "--input", csv, "--group-column", "arm", "--method", "crossmatch", "--seed", "9"]));
    let env = Command::new(env!("CARGO_BIN_EXE_graphbal"))
        .args(["test", "--input", csv, "--group-column", "arm", "--method", "crossmatch"])
        .env("GRAPHBAL_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), flag);
    assert!(String::from_utf8_lossy(&env.stderr).contains("seed 9"));
}

#[test]
fn csv_report_format_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    write_sample(&csv, 30);
    let report = dir.path().join("r.csv");
    stdout(&graphbal(&[
        "test", "--input", csv.to_str().unwrap(), "--group-column", "arm", "--method", "ranks",
        "--format", "csv", "-o", report.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(report).unwrap();
    assert_eq!(text.lines().count(), 2);
}
