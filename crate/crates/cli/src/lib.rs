//! `quadreg` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 data or resource error, 3 a `--strict`
//! run that did not converge.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use quadreg::{
    admm_solve, lambda_max_for, ridge_reference, ridge_structured, simulate, solve_path,
    AdmmConfig, CoefMatrix, Dataset, GridSpec, MaskPolicy, MemoryGuard, Model, PathOptions, PenaltySpec,
    Precomputation, Preset, RidgeVariant, SimSpec,
};
use serde::Serialize;

pub mod io;

use io::{read_data_csv, read_matrix_json, write_data_csv, write_json, MatrixJson};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(..) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl From<quadreg::Error> for CliError {
    fn from(e: quadreg::Error) -> Self {
        match e {
            quadreg::Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "quadreg", version, about = "Penalized quadratic regression with all pairwise interactions")]
pub struct Cli {
    /// Worker threads for path runs (default: available parallelism).
    #[arg(long, global = true, env = "QUADREG_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ridge solution by one of the four solvers.
    Ridge(RidgeArgs),
    /// Single penalized solve by consensus ADMM.
    Fit(FitArgs),
    /// Warm-started solve over an (alpha, lambda) grid.
    Path(PathArgs),
    /// Synthetic data from one of the toy models.
    Simulate(SimulateArgs),
    /// Ridge solver timings.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with the response in the first column and raw covariates after it.
    #[arg(long)]
    pub data: PathBuf,
    /// Fit on the raw columns without prepending a constant column. The
    /// first column then stands in for the intercept in group penalties.
    #[arg(long)]
    pub no_intercept: bool,
    /// Center and scale each covariate column to unit standard deviation
    /// before fitting. Off by default: fits use the columns as given.
    #[arg(long)]
    pub standardize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset<f64>, CliError> {
        read_data_csv(&self.data)?.into_dataset(!self.no_intercept, self.standardize)
    }

    fn mask(&self) -> MaskPolicy {
        if self.no_intercept {
            MaskPolicy::PenalizeAll
        } else {
            MaskPolicy::ExcludeIntercept
        }
    }
}

#[derive(Debug, Args)]
pub struct RidgeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda: f64,
    /// naive, woodbury, svd or structured.
    #[arg(long, default_value = "structured")]
    pub variant: RidgeVariant,
    /// Output JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 10.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_abs: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_rel: f64,
    /// Exit with code 3 if any solve stops at the iteration cap.
    #[arg(long)]
    pub strict: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<AdmmConfig<f64>, CliError> {
        let c = AdmmConfig {
            rho: self.rho,
            max_iter: self.max_iter,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// l1, l1+l2, l1+linf, l1+l1linf or l1+nuclear.
    #[arg(long)]
    pub penalty: Preset,
    #[arg(long)]
    pub lambda1: f64,
    /// Weight of the second penalty family; ignored for `l1`.
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub penalty: Preset,
    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,
    /// Ignored for single-family presets.
    #[arg(long, default_value_t = 10)]
    pub n_alpha: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda_min_ratio: f64,
    /// True coefficient matrix (JSON); adds a `csi` column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub cold: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// 1 (strong heredity), 2 (weak heredity) or 3 (interactions only).
    #[arg(long)]
    pub model: u8,
    #[arg(long)]
    pub n: usize,
    /// Raw covariate count, at least 10.
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub corr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long)]
    pub out_data: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "structured,woodbury")]
    pub variants: Vec<RidgeVariant>,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Raw covariate counts, at least 10 each.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs, reports errors on stderr and
/// returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    match &cli.command {
        Command::Ridge(a) => run_ridge(a),
        Command::Fit(a) => run_fit(a),
        Command::Path(a) => run_path(a, cli.threads),
        Command::Simulate(a) => run_simulate(a),
        Command::Bench(a) => run_bench(a),
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite and > 0, got {v}")))
    }
}

fn solve_ridge(data: &Dataset<f64>, lambda: f64, variant: RidgeVariant) -> Result<CoefMatrix<f64>, CliError> {
    Ok(match variant {
        RidgeVariant::Structured => ridge_structured(&Precomputation::new(data), data, lambda)?,
        v => ridge_reference(data, lambda, v, &MemoryGuard::default())?,
    })
}

pub fn run_ridge(a: &RidgeArgs) -> Result<(), CliError> {
    positive("lambda", a.lambda)?;
    let data = a.data.load()?;
    let start = Instant::now();
    let b = solve_ridge(&data, a.lambda, a.variant)?;
    let secs = start.elapsed().as_secs_f64();
    write_json(a.out.as_deref(), &MatrixJson::from_matrix(&b))?;
    eprintln!("{} ridge: {secs:.6} s", a.variant);
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitOutput {
    penalty: String,
    lambda1: f64,
    lambda2: f64,
    lambda1_max: f64,
    lambda2_max: Option<f64>,
    p: usize,
    entries: Vec<(usize, usize, f64)>,
    iterations: usize,
    converged: bool,
    objective: f64,
    primal_residuals: Vec<f64>,
    dual_residuals: Vec<f64>,
}

pub fn run_fit(a: &FitArgs) -> Result<(), CliError> {
    let config = a.solver.config()?;
    let data = a.data.load()?;
    let mask = a.data.mask();
    let pre = Precomputation::new(&data);
    let (f1, f2) = a.penalty.families();
    let lambda2 = if f2.is_some() { a.lambda2 } else { 0.0 };
    let spec = PenaltySpec::preset(a.penalty, a.lambda1, lambda2, mask)?;
    let sol = admm_solve(&data, &pre, &spec, &config, None)?;
    let triplets = MatrixJson::from_matrix(&sol.sparse_block);
    let out = FitOutput {
        penalty: a.penalty.to_string(),
        lambda1: a.lambda1,
        lambda2,
        lambda1_max: lambda_max_for(&pre, &data, f1, mask),
        lambda2_max: f2.map(|f| lambda_max_for(&pre, &data, f, mask)),
        p: triplets.p,
        entries: triplets.entries,
        iterations: sol.iterations,
        converged: sol.converged,
        objective: sol.objective,
        primal_residuals: sol.primal_residuals,
        dual_residuals: sol.dual_residuals,
    };
    write_json(a.out.as_deref(), &out)?;
    if a.solver.strict && !sol.converged {
        return Err(CliError::NotConverged(format!("no convergence in {} iterations", sol.iterations)));
    }
    Ok(())
}

pub fn run_path(a: &PathArgs, threads: Option<usize>) -> Result<(), CliError> {
    let config = a.solver.config()?;
    let grid = GridSpec {
        n_lambda: a.n_lambda,
        n_alpha: a.n_alpha,
        lambda_min_ratio: a.lambda_min_ratio,
    };
    grid.validate()?;
    let data = a.data.load()?;
    let truth = a.truth.as_deref().map(read_matrix_json).transpose()?;
    let options = PathOptions {
        mask: a.data.mask(),
        warm_start: !a.cold,
        threads,
        ..PathOptions::default()
    };
    let res = solve_path(&data, a.penalty, &grid, &config, truth.as_ref(), &options)?;

    let mut header = vec![
        "alpha", "lambda", "lambda1", "lambda2", "objective", "iters", "converged", "support_size",
    ];
    if truth.is_some() {
        header.push("csi");
    }
    let mut w = csv_writer(a.out.as_deref())?;
    let err = |e: csv::Error| CliError::Io("path output".into(), e.into());
    w.write_record(&header).map_err(err)?;
    for pt in &res.points {
        let mut row = vec![
            pt.alpha.to_string(),
            pt.lambda.to_string(),
            pt.lambda1.to_string(),
            pt.lambda2.to_string(),
            pt.objective.to_string(),
            pt.iterations.to_string(),
            pt.converged.to_string(),
            pt.support_size.to_string(),
        ];
        if let Some(c) = pt.csi {
            row.push(c.to_string());
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Io("path output".into(), e))?;
    if let Some((idx, best)) = res.best_csi() {
        let pt = &res.points[idx];
        eprintln!("best csi {best:.4} at alpha={} lambda={}", pt.alpha, pt.lambda);
    }
    if a.solver.strict && !res.all_converged() {
        let failed = res.points.iter().filter(|p| !p.converged).count();
        return Err(CliError::NotConverged(format!("{failed} grid points did not converge")));
    }
    Ok(())
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn std::io::Write>>, CliError> {
    let sink: Box<dyn std::io::Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Io(p.display().to_string(), e))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

pub fn run_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let model = Model::from_id(a.model)?;
    let spec = SimSpec {
        corr: a.corr,
        noise_sd: a.noise_sd,
        ..SimSpec::new(model, a.n, a.p, a.seed)
    };
    spec.validate()?;
    let raw = quadreg::gen_design::<f64>(&spec)?;
    let (y, truth) = quadreg::gen_response(&spec, &raw)?;
    write_data_csv(&a.out_data, &y, &raw)?;
    write_json(Some(&a.out_truth), &MatrixJson::from_matrix(&truth))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_bench(a: &BenchArgs) -> Result<(), CliError> {
    positive("lambda", a.lambda)?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    let mut rows = Vec::new();
    for &p in &a.p {
        let spec = SimSpec::new(Model::Strong, a.n, p, a.seed);
        spec.validate()?;
        let (data, _) = simulate::<f64>(&spec)?;
        for &variant in &a.variants {
            // warm-up, excluded
            solve_ridge(&data, a.lambda, variant)?;
            let times: Vec<f64> = (0..a.reps)
                .map(|_| {
                    let t = Instant::now();
                    solve_ridge(&data, a.lambda, variant).map(|_| t.elapsed().as_secs_f64())
                })
                .collect::<Result<_, _>>()?;
            let (mean, sd) = mean_sd(&times);
            eprintln!("{variant} n={} p={p}: {mean:.6} s ({sd:.6})", a.n);
            rows.push((variant, p, mean, sd));
        }
    }
    let mut w = csv_writer(a.out.as_deref())?;
    let err = |e: csv::Error| CliError::Io("bench output".into(), e.into());
    w.write_record(["variant", "n", "p", "mean_seconds", "sd_seconds"]).map_err(err)?;
    for (variant, p, mean, sd) in rows {
        w.write_record([variant.name().to_string(), a.n.to_string(), p.to_string(), mean.to_string(), sd.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Io("bench output".into(), e))
}
