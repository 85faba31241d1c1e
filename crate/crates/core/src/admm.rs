//! Consensus ADMM for the squared loss plus any number of penalty terms.
//!
//! Block 0 carries the squared loss and block `i >= 1` carries penalty term
//! `i - 1`. One iteration is
//!
//! ```text
//! B_i  <- prox_{f_i, rho}(Bbar - U_i)        for every block
//! Bbar <- mean_i B_i                          (sum_i U_i stays zero)
//! U_i  <- U_i + B_i - Bbar
//! ```
//!
//! The loss prox reuses one Cholesky factor of `rho I_n + G` for the whole
//! solve, so an iteration costs `O(n p^2 + n^2)` plus the penalty proxes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{objective, symmetrize, CoefMatrix, Dataset, Precomputation};
use crate::penalty::{prox_penalty_term, PenaltyKind, PenaltySpec};
use crate::ridge::LossProx;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig<T: Real> {
    pub rho: T,
    pub max_iter: usize,
    pub eps_abs: T,
    pub eps_rel: T,
}

impl<T: Real> Default for AdmmConfig<T> {
    fn default() -> Self {
        AdmmConfig {
            rho: T::lit(10.0),
            max_iter: 1000,
            eps_abs: T::lit(1e-6),
            eps_rel: T::lit(1e-4),
        }
    }
}

impl<T: Real> AdmmConfig<T> {
    /// Default settings with `rho = sqrt(p)`.
    pub fn with_sqrt_p_rho(p: usize) -> Self {
        AdmmConfig {
            rho: T::from_count(p).sqrt(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("rho", self.rho)?;
        pos("eps_abs", self.eps_abs)?;
        pos("eps_rel", self.eps_rel)?;
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be positive"));
        }
        Ok(())
    }
}

/// Iterates of one ADMM run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T: Real> {
    /// `blocks[0]` is the loss block, `blocks[i]` the block of term `i - 1`.
    pub blocks: Vec<DMatrix<T>>,
    pub duals: Vec<DMatrix<T>>,
    pub consensus: DMatrix<T>,
    pub iteration: usize,
}

impl<T: Real> AdmmState<T> {
    pub fn zeros(p: usize, n_terms: usize) -> Self {
        let z = DMatrix::zeros(p, p);
        AdmmState {
            blocks: vec![z.clone(); n_terms + 1],
            duals: vec![z.clone(); n_terms + 1],
            consensus: z,
            iteration: 0,
        }
    }

    pub fn p(&self) -> usize {
        self.consensus.nrows()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `sum_i U_i`, which stays zero up to round-off from a zero start.
    pub fn dual_sum(&self) -> DMatrix<T> {
        self.duals
            .iter()
            .fold(DMatrix::zeros(self.p(), self.p()), |acc, u| acc + u)
    }
}

#[derive(Debug, Clone)]
pub struct AdmmSolution<T: Real> {
    pub consensus: CoefMatrix<T>,
    /// Exactly sparse estimate: the `l1` block (the consensus when there is
    /// none) with every entry zeroed that some penalty block sets to exactly
    /// zero.
    pub sparse_block: CoefMatrix<T>,
    pub iterations: usize,
    pub primal_residuals: Vec<T>,
    pub dual_residuals: Vec<T>,
    pub converged: bool,
    /// Objective evaluated at `sparse_block`.
    pub objective: T,
    /// Final iterates, usable as a warm start.
    pub state: AdmmState<T>,
}

/// Primal and dual residuals between consecutive states:
/// `sqrt(sum_i ||B_i - Bbar||^2)` and `rho sqrt(N+1) ||Bbar - Bbar_prev||`.
pub fn compute_residuals<T: Real>(prev: &AdmmState<T>, next: &AdmmState<T>, rho: T) -> (T, T) {
    let primal = next
        .blocks
        .iter()
        .fold(T::zero(), |acc, b| acc + (b - &next.consensus).norm_squared())
        .sqrt();
    let dual = rho
        * T::from_count(next.n_blocks()).sqrt()
        * (&next.consensus - &prev.consensus).norm();
    (primal, dual)
}

/// A prepared solver for one dataset, penalty spec and configuration.
pub struct AdmmSolver<'a, T: Real> {
    data: &'a Dataset<T>,
    pre: &'a Precomputation<T>,
    spec: &'a PenaltySpec<T>,
    config: AdmmConfig<T>,
    loss: LossProx<T>,
}

impl<'a, T: Real> AdmmSolver<'a, T> {
    pub fn new(
        data: &'a Dataset<T>,
        pre: &'a Precomputation<T>,
        spec: &'a PenaltySpec<T>,
        config: AdmmConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        if pre.p() != data.p() || pre.n() != data.n() {
            return Err(Error::DimensionMismatch {
                what: "precomputation p",
                expected: data.p(),
                found: pre.p(),
            });
        }
        let loss = LossProx::new(pre, config.rho)?;
        Ok(AdmmSolver {
            data,
            pre,
            spec,
            config,
            loss,
        })
    }

    pub fn config(&self) -> &AdmmConfig<T> {
        &self.config
    }

    fn check_state(&self, state: &AdmmState<T>) -> Result<()> {
        let expected_blocks = self.spec.len() + 1;
        if state.n_blocks() != expected_blocks || state.duals.len() != expected_blocks {
            return Err(Error::DimensionMismatch {
                what: "ADMM state block count",
                expected: expected_blocks,
                found: state.n_blocks(),
            });
        }
        if state.p() != self.data.p() {
            return Err(Error::DimensionMismatch {
                what: "ADMM state dimension",
                expected: self.data.p(),
                found: state.p(),
            });
        }
        Ok(())
    }

    /// One sweep of block updates, averaging and dual updates.
    pub fn iterate(&self, state: &AdmmState<T>) -> Result<AdmmState<T>> {
        let rho = self.config.rho;
        let mut blocks = Vec::with_capacity(state.n_blocks());
        let target0 = &state.consensus - &state.duals[0];
        blocks.push(self.loss.apply(self.pre, self.data.design(), &target0));
        for (term, u) in self.spec.terms().iter().zip(&state.duals[1..]) {
            let target = &state.consensus - u;
            blocks.push(prox_penalty_term(term, &target, rho)?);
        }

        let count = T::from_count(blocks.len());
        let sum = blocks
            .iter()
            .fold(DMatrix::zeros(state.p(), state.p()), |acc, b| acc + b);
        let consensus = symmetrize(&(sum / count));

        let duals = state
            .duals
            .iter()
            .zip(&blocks)
            .map(|(u, b)| u + b - &consensus)
            .collect();

        Ok(AdmmState {
            blocks,
            duals,
            consensus,
            iteration: state.iteration + 1,
        })
    }

    fn thresholds(&self, state: &AdmmState<T>) -> (T, T) {
        let cfg = &self.config;
        let blocks = T::from_count(state.n_blocks()).sqrt();
        let abs = cfg.eps_abs * T::from_count(state.p()) * blocks;
        let block_norm = state
            .blocks
            .iter()
            .fold(T::zero(), |acc, b| acc + b.norm_squared())
            .sqrt();
        let dual_norm = state
            .duals
            .iter()
            .fold(T::zero(), |acc, u| acc + u.norm_squared())
            .sqrt();
        let primal = abs + cfg.eps_rel * block_norm.max(blocks * state.consensus.norm());
        let dual = abs + cfg.eps_rel * cfg.rho * dual_norm;
        (primal, dual)
    }

    /// Iterates from `warm` (or zero) until both residuals fall below their
    /// thresholds or `max_iter` sweeps have run.
    pub fn solve(&self, warm: Option<AdmmState<T>>) -> Result<AdmmSolution<T>> {
        let mut state = match warm {
            Some(s) => {
                self.check_state(&s)?;
                s
            }
            None => AdmmState::zeros(self.data.p(), self.spec.len()),
        };
        let mut primal_residuals = Vec::new();
        let mut dual_residuals = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        while iterations < self.config.max_iter {
            let next = self.iterate(&state)?;
            iterations += 1;
            let (r, s) = compute_residuals(&state, &next, self.config.rho);
            primal_residuals.push(r);
            dual_residuals.push(s);
            let (eps_pri, eps_dual) = self.thresholds(&next);
            state = next;
            if r <= eps_pri && s <= eps_dual {
                converged = true;
                break;
            }
        }

        let sparse = self.sparse_estimate(&state);
        let sparse_block = CoefMatrix::from_matrix(sparse)?;
        let objective = objective(self.data, &sparse_block, self.spec)?;
        Ok(AdmmSolution {
            consensus: CoefMatrix::from_matrix(state.consensus.clone())?,
            sparse_block,
            iterations,
            primal_residuals,
            dual_residuals,
            converged,
            objective,
            state,
        })
    }

    fn sparse_estimate(&self, state: &AdmmState<T>) -> DMatrix<T> {
        let terms = self.spec.terms();
        let l1_block = terms
            .iter()
            .position(|t| t.kind == PenaltyKind::L1AllPairs)
            .map(|i| i + 1);
        let mut out = match l1_block {
            Some(i) => state.blocks[i].clone(),
            None => state.consensus.clone(),
        };
        for block in &state.blocks[1..] {
            for (o, &b) in out.iter_mut().zip(block.iter()) {
                if b == T::zero() {
                    *o = T::zero();
                }
            }
        }
        out
    }
}

/// Single ADMM sweep.
pub fn admm_iterate<T: Real>(
    state: &AdmmState<T>,
    data: &Dataset<T>,
    pre: &Precomputation<T>,
    spec: &PenaltySpec<T>,
    config: &AdmmConfig<T>,
) -> Result<AdmmState<T>> {
    let solver = AdmmSolver::new(data, pre, spec, *config)?;
    solver.check_state(state)?;
    solver.iterate(state)
}

pub fn admm_solve<T: Real>(
    data: &Dataset<T>,
    pre: &Precomputation<T>,
    spec: &PenaltySpec<T>,
    config: &AdmmConfig<T>,
    warm: Option<AdmmState<T>>,
) -> Result<AdmmSolution<T>> {
    AdmmSolver::new(data, pre, spec, *config)?.solve(warm)
}
