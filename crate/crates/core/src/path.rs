//! Regularization paths over an `(alpha, lambda)` grid.
//!
//! For a preset with penalty levels `lambda1` (the `l1` term) and `lambda2`
//! (the second family), grid points are
//! `lambda1 = lambda * alpha * lambda1_max` and
//! `lambda2 = lambda * (1 - alpha) * lambda2_max`, with `lambda` log-spaced
//! from 1 down to `lambda_min_ratio`. Each alpha slice is solved from the
//! largest `lambda` down, warm-starting every solve from its predecessor.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::admm::{AdmmConfig, AdmmSolver, AdmmState};
use crate::error::{Error, Result};
use crate::model::{CoefMatrix, Dataset, Precomputation};
use crate::penalty::{lambda_max_for, MaskPolicy, PenaltySpec, Preset};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_lambda: usize,
    pub n_alpha: usize,
    pub lambda_min_ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_lambda: 50,
            n_alpha: 10,
            lambda_min_ratio: 0.01,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lambda == 0 {
            return Err(Error::param("n_lambda", "must be positive"));
        }
        if self.n_alpha == 0 {
            return Err(Error::param("n_alpha", "must be positive"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::param(
                "lambda_min_ratio",
                format!("must lie in (0, 1), got {}", self.lambda_min_ratio),
            ));
        }
        Ok(())
    }

    /// `alpha_i = i / n_alpha`, `i = 1..=n_alpha`.
    pub fn alphas(&self) -> Vec<f64> {
        (1..=self.n_alpha)
            .map(|i| i as f64 / self.n_alpha as f64)
            .collect()
    }

    /// Log-spaced scale factors from 1 down to `lambda_min_ratio`.
    pub fn lambdas(&self) -> Vec<f64> {
        if self.n_lambda == 1 {
            return vec![1.0];
        }
        let last = (self.n_lambda - 1) as f64;
        let log_min = self.lambda_min_ratio.ln();
        (0..self.n_lambda)
            .map(|i| (log_min * i as f64 / last).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T: Real> {
    pub alpha: T,
    pub lambda: T,
    pub lambda1: T,
    pub lambda2: T,
}

/// Grid points, alpha-major with `lambda` decreasing inside each slice. When
/// `lambda2_max` is `None` (single-family preset) only `alpha = 1` is used.
pub fn make_grid<T: Real>(spec: &GridSpec, lambda1_max: T, lambda2_max: Option<T>) -> Result<Vec<GridPoint<T>>> {
    spec.validate()?;
    let alphas = match lambda2_max {
        Some(_) => spec.alphas(),
        None => vec![1.0],
    };
    let l2max = lambda2_max.unwrap_or_else(T::zero);
    let lambdas = spec.lambdas();
    let mut out = Vec::with_capacity(alphas.len() * lambdas.len());
    for &a in &alphas {
        let alpha = T::lit(a);
        for &l in &lambdas {
            let lambda = T::lit(l);
            out.push(GridPoint {
                alpha,
                lambda,
                lambda1: lambda * alpha * lambda1_max,
                lambda2: lambda * (T::one() - alpha) * l2max,
            });
        }
    }
    Ok(out)
}

/// Upper-triangle index pairs `(j, k)`, `j <= k`, 0-based, with
/// `|B[j,k]| > tol`.
pub fn support<T: Real>(b: &CoefMatrix<T>, tol: T) -> BTreeSet<(usize, usize)> {
    let v = b.values();
    let mut out = BTreeSet::new();
    for k in 0..v.ncols() {
        for j in 0..=k {
            if v[(j, k)].abs() > tol {
                out.insert((j, k));
            }
        }
    }
    out
}

/// Critical success index: `|S_truth ∩ S_est| / |S_truth ∪ S_est|` over all
/// entries of the full matrices, 1 when both supports are empty.
pub fn csi<T: Real>(truth: &CoefMatrix<T>, estimate: &CoefMatrix<T>, tol: T) -> Result<T> {
    if truth.p() != estimate.p() {
        return Err(Error::DimensionMismatch {
            what: "CSI matrix dimension",
            expected: truth.p(),
            found: estimate.p(),
        });
    }
    let (mut both, mut either) = (0usize, 0usize);
    for (&t, &e) in truth.values().iter().zip(estimate.values().iter()) {
        let (t_nz, e_nz) = (t.abs() > tol, e.abs() > tol);
        both += usize::from(t_nz && e_nz);
        either += usize::from(t_nz || e_nz);
    }
    if either == 0 {
        return Ok(T::one());
    }
    Ok(T::from_count(both) / T::from_count(either))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions<T: Real> {
    pub mask: MaskPolicy,
    pub warm_start: bool,
    /// Nonzero tolerance for supports and CSI.
    pub support_tol: T,
    /// Worker threads for alpha slices; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub keep_estimates: bool,
}

impl<T: Real> Default for PathOptions<T> {
    fn default() -> Self {
        PathOptions {
            mask: MaskPolicy::default(),
            warm_start: true,
            support_tol: T::lit(1e-6),
            threads: None,
            keep_estimates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint<T: Real> {
    pub alpha: T,
    pub lambda: T,
    pub lambda1: T,
    pub lambda2: T,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    pub support_size: usize,
    pub csi: Option<T>,
}

#[derive(Debug, Clone)]
pub struct PathResult<T: Real> {
    pub preset: Preset,
    pub lambda1_max: T,
    pub lambda2_max: Option<T>,
    pub points: Vec<PathPoint<T>>,
    /// Sparse estimates in grid order, if requested.
    pub estimates: Option<Vec<CoefMatrix<T>>>,
}

impl<T: Real> PathResult<T> {
    /// Highest CSI on the grid and its index.
    pub fn best_csi(&self) -> Option<(usize, T)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.csi.map(|c| (i, c)))
            .fold(None, |best: Option<(usize, T)>, (i, c)| match best {
                Some((_, b)) if b >= c => best,
                _ => Some((i, c)),
            })
    }

    pub fn total_iterations(&self) -> usize {
        self.points.iter().map(|p| p.iterations).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }
}

type SliceOutput<T> = Vec<(PathPoint<T>, Option<CoefMatrix<T>>)>;

#[allow(clippy::too_many_arguments)]
fn solve_slice<T: Real>(
    data: &Dataset<T>,
    pre: &Precomputation<T>,
    preset: Preset,
    points: &[GridPoint<T>],
    config: &AdmmConfig<T>,
    truth: Option<&CoefMatrix<T>>,
    options: &PathOptions<T>,
) -> Result<SliceOutput<T>> {
    let mut warm: Option<AdmmState<T>> = None;
    let mut out = Vec::with_capacity(points.len());
    for gp in points {
        let spec = PenaltySpec::preset(preset, gp.lambda1, gp.lambda2, options.mask)?;
        let solver = AdmmSolver::new(data, pre, &spec, *config)?;
        let start = if options.warm_start { warm.take() } else { None };
        let sol = solver.solve(start)?;
        let support_size = support(&sol.sparse_block, options.support_tol).len();
        let csi = truth
            .map(|t| csi(t, &sol.sparse_block, options.support_tol))
            .transpose()?;
        out.push((
            PathPoint {
                alpha: gp.alpha,
                lambda: gp.lambda,
                lambda1: gp.lambda1,
                lambda2: gp.lambda2,
                objective: sol.objective,
                iterations: sol.iterations,
                converged: sol.converged,
                support_size,
                csi,
            },
            options.keep_estimates.then(|| sol.sparse_block.clone()),
        ));
        warm = Some(sol.state);
    }
    Ok(out)
}

/// Solves `preset` over the grid. Non-convergence is recorded per point and
/// never aborts the path.
pub fn solve_path<T: Real>(
    data: &Dataset<T>,
    preset: Preset,
    grid: &GridSpec,
    config: &AdmmConfig<T>,
    truth: Option<&CoefMatrix<T>>,
    options: &PathOptions<T>,
) -> Result<PathResult<T>> {
    config.validate()?;
    if let Some(t) = truth {
        if t.p() != data.p() {
            return Err(Error::DimensionMismatch {
                what: "truth matrix dimension",
                expected: data.p(),
                found: t.p(),
            });
        }
    }
    let pre = Precomputation::new(data);
    let (first, second) = preset.families();
    let lambda1_max = lambda_max_for(&pre, data, first, options.mask);
    let lambda2_max = second.map(|f| lambda_max_for(&pre, data, f, options.mask));
    let points = make_grid(grid, lambda1_max, lambda2_max)?;
    let slice_len = grid.n_lambda;

    let run = || {
        points
            .par_chunks(slice_len)
            .map(|slice| solve_slice(data, &pre, preset, slice, config, truth, options))
            .collect::<Result<Vec<_>>>()
    };
    let slices = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut records = Vec::with_capacity(points.len());
    let mut estimates = options.keep_estimates.then(Vec::new);
    for (point, est) in slices.into_iter().flatten() {
        records.push(point);
        if let (Some(all), Some(e)) = (estimates.as_mut(), est) {
            all.push(e);
        }
    }
    Ok(PathResult {
        preset,
        lambda1_max,
        lambda2_max,
        points: records,
        estimates,
    })
}
