use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rasqp::registry::problem_rng;
use rasqp::{execute, Method, RunConfig};
use rasqp_core::problem::{NoisyQuadratic, NoisyQuadraticSpec};
use serde::Deserialize;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ra-sqp"))
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn ra_sqp(dir: &Path, args: &[&str]) -> Output {
    ok(bin().current_dir(dir).args(args).output().unwrap())
}

#[derive(Debug, Deserialize)]
struct Row {
    k: i64,
    batch_size: usize,
    grad_evals_cum: u64,
    minres_iters_cum: u64,
    barrier_iters_cum: u64,
    violation_inf: f64,
    stationarity: f64,
    tau_exit: f64,
    term_cause: String,
}

fn read_trace(path: &Path) -> Vec<Row> {
    csv::Reader::from_path(path).unwrap().deserialize().map(|r| r.unwrap()).collect()
}

fn check_trace(rows: &[Row]) {
    assert!(rows.len() >= 2);
    assert_eq!(rows[0].k, -1);
    assert_eq!(rows[0].term_cause, "initial");
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert_eq!(b.k, a.k + 1);
        assert!(b.grad_evals_cum >= a.grad_evals_cum);
        assert!(b.minres_iters_cum >= a.minres_iters_cum);
        assert!(b.barrier_iters_cum >= a.barrier_iters_cum);
        let work = |r: &Row| r.grad_evals_cum + r.minres_iters_cum + r.barrier_iters_cum;
        assert!(work(b) > work(a), "outer {} did no work", b.k);
        assert!(b.batch_size > 0);
        assert!(b.tau_exit > 0.0);
        assert!(b.violation_inf.is_finite() && b.stationarity.is_finite());
    }
}

#[test]
fn det_sqp_solves_the_quadratic_to_the_closed_form() {
    let dir = TempDir::new().unwrap();
    ra_sqp(dir.path(), &["run", "--problem", "synth-eq-quad", "--method", "det-sqp", "--seed", "1"]);
    let rows = read_trace(&dir.path().join("synth-eq-quad_det-sqp_1.csv"));
    check_trace(&rows);
    let last = rows.last().unwrap();
    assert!(last.stationarity <= 1e-8, "stationarity {:e}", last.stationarity);
    assert!(last.violation_inf <= 1e-8);

    let reference = NoisyQuadratic::generate(&NoisyQuadraticSpec::default(), &mut problem_rng(1)).unwrap();
    let (x_star, lambda_star) = reference.solution();
    let rec = execute(&RunConfig::new("synth-eq-quad", Method::DetSqp, 1), None).unwrap();
    let out = rec.outcome.unwrap();
    let err = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(err(&out.x, x_star) <= 1e-7, "x error {:e}", err(&out.x, x_star));
    assert!(err(&out.lambda, lambda_star) <= 1e-7, "λ error {:e}", err(&out.lambda, lambda_star));
}

#[test]
fn trace_is_monotone_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["run", "--problem", "random-eq", "--method", "ra-sqp-dl", "--seed", "3", "--budget", "50000"];
    ra_sqp(dir.path(), &[&args[..], &["--output", "a.csv"]].concat());
    ra_sqp(dir.path(), &[&args[..], &["--output", "b.csv"]].concat());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    check_trace(&read_trace(&dir.path().join("a.csv")));
}

#[test]
fn unknown_method_exits_with_usage() {
    let out = bin().args(["run", "--problem", "hs6", "--method", "sgd"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage:"), "{err}");
    assert!(err.contains("ra-sqp-dl"));
}

#[test]
fn config_errors_fail_with_a_message() {
    let out = bin().args(["run", "--problem", "hs999", "--method", "det-sqp"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hs999"));
    let out = bin().args(["run", "--problem", "logreg-ineq", "--method", "ra-sqp-dl"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "problem = \"hs6\"\nmethod = \"ra-sqp-dl\"\nseed = 2\nbudget = 5000\noutput = \"from_file.csv\"\n",
    )
    .unwrap();
    let out = ra_sqp(dir.path(), &["run", "--config", "run.toml", "--seed", "5", "--results", "results.csv"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("hs6 ra-sqp-dl seed=5"), "{stdout}");
    assert!(dir.path().join("from_file.csv").exists());
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert!(lines.next().unwrap().starts_with("problem,method,seed,status"));
    assert!(lines.next().unwrap().starts_with("hs6,ra-sqp-dl,5,"));
    let rows = read_trace(&dir.path().join("from_file.csv"));
    assert!(rows.last().unwrap().grad_evals_cum <= 5000);
}

fn sweep(dir: &Path, threads: &str) -> PathBuf {
    let out = dir.join(format!("sweep{threads}"));
    ok(bin()
        .current_dir(dir)
        .env("RA_SQP_THREADS", threads)
        .args([
            "sweep",
            "--problems",
            "synth-eq-quad,hs6",
            "--methods",
            "ra-sqp-dl,det-sqp",
            "--seeds",
            "0..3",
            "--budget",
            "40000",
            "--out-dir",
        ])
        .arg(&out)
        .output()
        .unwrap());
    out
}

#[test]
fn sweep_is_independent_of_thread_count_and_feeds_profile() {
    let dir = TempDir::new().unwrap();
    let one = sweep(dir.path(), "1");
    let three = sweep(dir.path(), "3");
    let results = std::fs::read(one.join("results.csv")).unwrap();
    assert_eq!(results, std::fs::read(three.join("results.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&results).lines().count(), 1 + 2 * 2 * 3);
    for p in ["synth-eq-quad", "hs6"] {
        for m in ["ra-sqp-dl", "det-sqp"] {
            for s in 0..3 {
                let name = format!("traces/{p}_{m}_{s}.csv");
                let a = std::fs::read(one.join(&name)).unwrap();
                assert_eq!(a, std::fs::read(three.join(&name)).unwrap(), "{name}");
                check_trace(&read_trace(&one.join(&name)));
            }
        }
    }

    let profile = dir.path().join("profile.csv");
    ra_sqp(
        dir.path(),
        &[
            "profile",
            "--tol",
            "1e-2",
            "--metric",
            "grad_evals",
            "--inputs",
            one.join("results.csv").to_str().unwrap(),
            "--output",
            profile.to_str().unwrap(),
        ],
    );
    let mut reader = csv::Reader::from_path(&profile).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["method", "tau", "fraction", "metric", "tol"]);
    let mut curves: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for rec in reader.records() {
        let rec = rec.unwrap();
        curves.entry(rec[0].to_string()).or_default().push((rec[1].parse().unwrap(), rec[2].parse().unwrap()));
    }
    assert_eq!(curves.len(), 2);
    for (method, pts) in &curves {
        assert!(pts.iter().all(|&(t, f)| t >= 1.0 && (0.0..=1.0).contains(&f)), "{method}");
        assert!(pts.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1), "{method}: {pts:?}");
    }
}

#[test]
fn active_set_report_is_written() {
    let dir = TempDir::new().unwrap();
    ra_sqp(
        dir.path(),
        &["active-set", "--problem", "random-ineq", "--method", "ra-sqp-linf", "--seed", "2", "--budget", "20000"],
    );
    let mut reader = csv::Reader::from_path(dir.path().join("active_set.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["k", "active", "size", "jaccard", "violation_inf"]);
    let recs: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert!(recs.len() >= 2);
    assert_eq!(&recs[0][0], "-1");
    for r in &recs {
        let j: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&j));
    }
}

#[test]
fn logistic_regression_reads_libsvm_data() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for i in 0..90 {
        let class = i % 3;
        let a = (i as f64 * 0.37).sin() * 0.3 + class as f64 * 0.5;
        let b = (i as f64 * 0.11).cos() * 0.3 - class as f64 * 0.4;
        text.push_str(&format!("{} 1:{a} 3:{b}\n", class + 1));
    }
    std::fs::write(dir.path().join("toy.libsvm"), text).unwrap();
    let out = ra_sqp(
        dir.path(),
        &[
            "run",
            "--problem",
            "logreg-eq",
            "--method",
            "ra-sqp-dl",
            "--data",
            "toy.libsvm",
            "--budget",
            "20000",
            "--output",
            "toy.csv",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("logreg-eq ra-sqp-dl seed=0"));
    let rows = read_trace(&dir.path().join("toy.csv"));
    check_trace(&rows);
    // 3 explicit features plus bias, 3 classes, 90 samples per full gradient
    assert!(rows[1].batch_size <= 90);

    let out = bin()
        .current_dir(dir.path())
        .args(["run", "--problem", "logreg-eq", "--method", "det-sqp", "--data", "missing.libsvm"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
