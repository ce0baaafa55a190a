use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lngm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lngm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn solve_json(args: &[&str]) -> Value {
    let o = lngm(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn point_arg(x: &Value) -> String {
    x.as_array()
        .unwrap()
        .iter()
        .map(|v| format!("{:?}", v.as_f64().unwrap()))
        .collect::<Vec<_>>()
        .join(",")
}

#[test]
fn solved_certificates_verify() {
    let report = solve_json(&["solve", "--corpus", "psi-roots-eq"]);
    let certs = report["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 2);
    for c in certs {
        let point = point_arg(&c["x_star"]);
        let mu = format!("{:?}", c["mu_star"].as_f64().unwrap());
        let o = lngm(&["verify", "--corpus", "psi-roots-eq", "--point", &point, "--mu", &mu]);
        assert!(o.status.success(), "{}", stdout(&o));
    }
    let o = lngm(&["verify", "--corpus", "psi-roots-eq", "--point", "0,0", "--mu", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generated_files_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = lngm(&["generate", "--n", "4", "--count", "3", "--seed", "5", "--out", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let paths: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(paths.len(), 3);
    for p in &paths {
        assert!(Path::new(p).exists());
        let report = solve_json(&["solve", "--input", p]);
        assert_eq!(report["status"], "Solved");
        assert!(!report["certificates"].as_array().unwrap().is_empty(), "{p}");
    }
}

#[test]
fn text_report_and_errors() {
    let o = lngm(&["solve", "--corpus", "remark-2.2", "--format", "text"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lngm(&["solve", "--corpus", "no-such-entry"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-entry"));
    let o = lngm(&["solve"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_prints_csv() {
    let o = lngm(&["bench", "--n", "3,4", "--count", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], lngm::cli::BENCH_HEADER);
    assert_eq!(lines.len(), 3);
    for (line, n) in lines[1..].iter().zip(["3", "4"]) {
        let cols: Vec<_> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[0], n);
        assert!(cols[6].parse::<f64>().unwrap() >= 1.0);
    }
}
