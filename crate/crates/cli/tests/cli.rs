//! End-to-end runs of the `quadreg` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quadreg::{objective, CoefMatrix, DMatrix, DVector, Dataset, MaskPolicy, PenaltySpec, Preset};
use serde_json::Value;

fn quadreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadreg"))
        .args(args)
        .env_remove("QUADREG_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Sim {
    _dir: tempfile::TempDir,
    data: PathBuf,
    truth: PathBuf,
}

fn simulate(model: &str, n: &str, p: &str, seed: &str) -> Sim {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let truth = dir.path().join("truth.json");
    let out = quadreg(&[
        "simulate", "--model", model, "--n", n, "--p", p, "--seed", seed,
        "--out-data", path_str(&data), "--out-truth", path_str(&truth),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    Sim { _dir: dir, data, truth }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(v: &Value) -> DMatrix<f64> {
    let p = v["p"].as_u64().unwrap() as usize;
    let mut m = DMatrix::zeros(p, p);
    for e in v["entries"].as_array().unwrap() {
        let (j, k, x) = (e[0].as_u64().unwrap() as usize, e[1].as_u64().unwrap() as usize, e[2].as_f64().unwrap());
        assert!(j <= k);
        m[(j, k)] = x;
        m[(k, j)] = x;
    }
    m
}

fn load_dataset(path: &Path) -> Dataset<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    let q = rows[0].len() - 1;
    let y = DVector::from_fn(n, |i, _| rows[i][0]);
    let raw = DMatrix::from_fn(n, q, |i, j| rows[i][j + 1]);
    Dataset::from_raw(raw, y, true).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let a = simulate("1", "60", "12", "42");
    let b = simulate("1", "60", "12", "42");
    assert_eq!(std::fs::read(&a.data).unwrap(), std::fs::read(&b.data).unwrap());
    assert_eq!(std::fs::read(&a.truth).unwrap(), std::fs::read(&b.truth).unwrap());
    let header = std::fs::read_to_string(&a.data).unwrap();
    assert!(header.starts_with("y,x1,x2,"));
}

#[test]
fn ridge_variants_agree_through_files() {
    let sim = simulate("1", "50", "29", "3");
    let dir = tempfile::tempdir().unwrap();
    let mut mats = Vec::new();
    for variant in ["structured", "woodbury"] {
        let out_path = dir.path().join(format!("{variant}.json"));
        let out = quadreg(&[
            "ridge", "--data", path_str(&sim.data), "--lambda", "10", "--variant", variant,
            "--out", path_str(&out_path),
        ]);
        assert_eq!(code(&out), 0);
        assert!(String::from_utf8_lossy(&out.stderr).contains(" s"));
        mats.push(matrix(&json(&out_path)));
    }
    assert_eq!(mats[0].nrows(), 30);
    assert!((&mats[0] - &mats[1]).amax() < 1e-8);
}

#[test]
fn naive_variant_hits_the_guard() {
    let sim = simulate("1", "20", "80", "1");
    let out = quadreg(&["ridge", "--data", path_str(&sim.data), "--lambda", "1", "--variant", "naive"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem too large"));
}

#[test]
fn malformed_data_exits_two_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,x1\n1,2\n3,oops\n").unwrap();
    let out = quadreg(&["ridge", "--data", path_str(&bad), "--lambda", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&quadreg(&[])), 1);
    assert_eq!(code(&quadreg(&["fit", "--penalty", "l7", "--lambda1", "1", "--data", "x.csv"])), 1);
    assert_eq!(code(&quadreg(&["ridge", "--data", "x.csv", "--lambda", "-1"])), 1);
    assert_eq!(code(&quadreg(&["--version"])), 0);
}

#[test]
fn fit_reports_a_consistent_objective() {
    let sim = simulate("2", "120", "10", "5");
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fit.json");
    let out = quadreg(&[
        "fit", "--data", path_str(&sim.data), "--penalty", "l1+l2", "--lambda1", "0.2", "--lambda2", "0.1",
        "--out", path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out_path);
    let b = CoefMatrix::from_matrix(matrix(&v)).unwrap();
    let data = load_dataset(&sim.data);
    let spec = PenaltySpec::preset(Preset::L1L2, 0.2, 0.1, MaskPolicy::ExcludeIntercept).unwrap();
    let recomputed = objective(&data, &b, &spec).unwrap();
    assert_eq!(recomputed, v["objective"].as_f64().unwrap());
    assert!(v["iterations"].as_u64().unwrap() > 0);
    assert_eq!(v["primal_residuals"].as_array().unwrap().len() as u64, v["iterations"].as_u64().unwrap());
}

#[test]
fn fit_at_lambda_max_leaves_only_the_intercept() {
    let sim = simulate("1", "100", "10", "8");
    let dir = tempfile::tempdir().unwrap();
    let probe = dir.path().join("probe.json");
    let args = |lambda: &str, out: &Path| {
        quadreg(&[
            "fit", "--data", path_str(&sim.data), "--penalty", "l1", "--lambda1", lambda,
            "--eps-abs", "1e-9", "--eps-rel", "1e-8", "--max-iter", "20000", "--out", path_str(out),
        ])
    };
    assert_eq!(code(&args("1", &probe)), 0);
    let lmax = json(&probe)["lambda1_max"].as_f64().unwrap();
    let at = dir.path().join("at.json");
    assert_eq!(code(&args(&lmax.to_string(), &at)), 0);
    let m = matrix(&json(&at));
    for k in 0..m.ncols() {
        for j in 0..m.nrows() {
            if (j, k) != (0, 0) {
                assert!(m[(j, k)].abs() <= 1e-6, "({j},{k}) = {}", m[(j, k)]);
            }
        }
    }
}

#[test]
fn strict_non_convergence_exits_three() {
    let sim = simulate("1", "60", "10", "2");
    let out = quadreg(&[
        "fit", "--data", path_str(&sim.data), "--penalty", "l1", "--lambda1", "0.1", "--max-iter", "2", "--strict",
    ]);
    assert_eq!(code(&out), 3);
    // the result is still written
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"objective\""));
}

#[test]
fn path_writes_one_row_per_grid_point() {
    let sim = simulate("1", "120", "10", "4");
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("path.csv");
    let out = quadreg(&[
        "path", "--data", path_str(&sim.data), "--penalty", "l1+l2", "--n-lambda", "10", "--n-alpha", "10",
        "--truth", path_str(&sim.truth), "--out", path_str(&csv_path), "--threads", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,lambda,lambda1,lambda2,objective,iters,converged,support_size,csi"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    for r in rows {
        let csi: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&csi));
    }
}

#[test]
fn path_output_ignores_worker_count() {
    let sim = simulate("3", "80", "10", "9");
    let run = |threads: &str| {
        let out = quadreg(&[
            "path", "--data", path_str(&sim.data), "--penalty", "l1+linf", "--n-lambda", "4", "--n-alpha", "3",
            "--threads", threads,
        ]);
        assert_eq!(code(&out), 0);
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn bench_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let out = quadreg(&[
        "bench", "--variants", "structured,woodbury", "--n", "40", "--p", "10,12", "--reps", "2",
        "--out", path_str(&csv_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "variant,n,p,mean_seconds,sd_seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("structured,40,10,"));
}
