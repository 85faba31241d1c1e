//! Ridge-penalized quadratic regression.
//!
//! Minimizes `(2n)^{-1} sum_i (y_i - x_i' B x_i)^2 + lambda/2 ||B||_F^2`.
//!
//! The structured solver never forms the `n x p^2` interaction design. With
//! `D = n^{-1} sum_i y_i x_i x_i'` and `G = n^{-1} (X X') o (X X')` it solves
//!
//! ```text
//! (lambda I_n + G) w = diag(X D X') / n
//! B = (D - X' diag(w) X) / lambda
//! ```
//!
//! at `O(n p^2 + n^3)` cost. The naive, Woodbury and SVD variants work on the
//! explicit vectorized problem and exist as oracles and benchmark baselines.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::model::{
    asymmetry, quadratic_forms, symmetrize, weighted_outer_sum, CoefMatrix, Dataset,
    Precomputation,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RidgeVariant {
    /// Direct solve of the `p^2 x p^2` normal equations.
    Naive,
    /// Woodbury identity on the explicit interaction design.
    Woodbury,
    /// Thin SVD of the explicit interaction design.
    Svd,
    /// Closed form through the `n x n` Hadamard-squared Gram matrix.
    Structured,
}

impl RidgeVariant {
    pub const ALL: [RidgeVariant; 4] = [
        RidgeVariant::Naive,
        RidgeVariant::Woodbury,
        RidgeVariant::Svd,
        RidgeVariant::Structured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RidgeVariant::Naive => "naive",
            RidgeVariant::Woodbury => "woodbury",
            RidgeVariant::Svd => "svd",
            RidgeVariant::Structured => "structured",
        }
    }
}

impl fmt::Display for RidgeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RidgeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RidgeVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param("variant", format!("unknown ridge variant `{s}`")))
    }
}

/// Size limits for the variants that materialize vectorized objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryGuard {
    /// Largest `p` for which the naive `p^2 x p^2` system is formed.
    pub naive_max_p: usize,
    /// Largest `n * p^2` for which the explicit interaction design is formed.
    pub explicit_max_entries: usize,
}

impl Default for MemoryGuard {
    fn default() -> Self {
        MemoryGuard {
            naive_max_p: 64,
            explicit_max_entries: 1 << 27,
        }
    }
}

impl MemoryGuard {
    fn check(&self, variant: RidgeVariant, n: usize, p: usize) -> Result<()> {
        match variant {
            RidgeVariant::Naive if p > self.naive_max_p => Err(Error::TooLarge {
                variant: variant.name(),
                required: p,
                limit: self.naive_max_p,
            }),
            RidgeVariant::Woodbury | RidgeVariant::Svd => {
                let required = n.saturating_mul(p).saturating_mul(p);
                if required > self.explicit_max_entries {
                    Err(Error::TooLarge {
                        variant: variant.name(),
                        required,
                        limit: self.explicit_max_entries,
                    })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn positive(name: &'static str, v: impl Real) -> Result<()> {
    if !v.is_finite() || v <= num_traits::Zero::zero() {
        return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn check_pre<T: Real>(pre: &Precomputation<T>, data: &Dataset<T>) -> Result<()> {
    if pre.p() != data.p() {
        return Err(Error::DimensionMismatch {
            what: "precomputation p",
            expected: data.p(),
            found: pre.p(),
        });
    }
    if pre.n() != data.n() {
        return Err(Error::DimensionMismatch {
            what: "precomputation n",
            expected: data.n(),
            found: pre.n(),
        });
    }
    Ok(())
}

/// Cholesky factor of `shift * I_n + G`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct StructuredFactor<T: Real> {
    shift: T,
    chol: Cholesky<T, Dyn>,
}

impl<T: Real> StructuredFactor<T> {
    pub fn new(pre: &Precomputation<T>, shift: T) -> Result<Self> {
        positive("lambda", shift)?;
        let mut m = pre.g.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        let chol = Cholesky::new(m)
            .ok_or_else(|| Error::Numerical("lambda I + G is not positive definite".into()))?;
        Ok(StructuredFactor { shift, chol })
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    /// Solves `n^{-1} sum_i x_i x_i' B x_i x_i' + shift * B = rhs` for a
    /// symmetric right-hand side.
    pub fn solve(&self, x: &DMatrix<T>, rhs: &DMatrix<T>) -> DMatrix<T> {
        let n_inv = T::one() / T::from_count(x.nrows());
        let v = quadratic_forms(x, rhs) * n_inv;
        let w = self.chol.solve(&v);
        let mut b = rhs - weighted_outer_sum(x, w.as_slice());
        b /= self.shift;
        symmetrize(&b)
    }
}

/// Closed-form ridge solution in `O(n p^2 + n^3)`.
pub fn ridge_structured<T: Real>(
    pre: &Precomputation<T>,
    data: &Dataset<T>,
    lambda: T,
) -> Result<CoefMatrix<T>> {
    check_pre(pre, data)?;
    let factor = StructuredFactor::new(pre, lambda)?;
    CoefMatrix::from_matrix(factor.solve(data.design(), &pre.d))
}

/// Prox of the squared loss, `argmin_B f0(B) + rho/2 ||B - A||^2`, with a
/// cached factorization so repeated calls at fixed `rho` cost `O(n p^2 + n^2)`.
#[derive(Debug, Clone)]
pub struct LossProx<T: Real> {
    factor: StructuredFactor<T>,
}

impl<T: Real> LossProx<T> {
    pub fn new(pre: &Precomputation<T>, rho: T) -> Result<Self> {
        positive("rho", rho)?;
        Ok(LossProx {
            factor: StructuredFactor::new(pre, rho)?,
        })
    }

    pub fn rho(&self) -> T {
        self.factor.shift()
    }

    /// Stationarity reads `n^{-1} sum x x' B x x' + rho B = D + rho A`, i.e.
    /// the ridge system with `lambda = rho` and `D` shifted by `rho A`.
    pub fn apply(&self, pre: &Precomputation<T>, x: &DMatrix<T>, a: &DMatrix<T>) -> DMatrix<T> {
        let rhs = &pre.d + a * self.rho();
        self.factor.solve(x, &rhs)
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

pub fn prox_quadratic_loss<T: Real>(
    pre: &Precomputation<T>,
    data: &Dataset<T>,
    a: &DMatrix<T>,
    rho: T,
) -> Result<CoefMatrix<T>> {
    check_pre(pre, data)?;
    if a.shape() != (data.p(), data.p()) {
        return Err(Error::DimensionMismatch {
            what: "prox argument dimension",
            expected: data.p(),
            found: a.nrows().max(a.ncols()),
        });
    }
    if asymmetry(a) > T::lit(SYMMETRY_TOL) {
        return Err(Error::param("A", "prox argument must be symmetric"));
    }
    let prox = LossProx::new(pre, rho)?;
    CoefMatrix::from_matrix(prox.apply(pre, data.design(), a))
}

/// Explicit interaction design `𝕏` (`p^2 x n`): column `i` is
/// `vec(x_i x_i') / sqrt(n)` in column-major order.
pub fn interaction_design<T: Real>(data: &Dataset<T>) -> DMatrix<T> {
    let (n, p) = (data.n(), data.p());
    let scale = T::one() / T::from_count(n).sqrt();
    let x = data.design();
    let mut out = DMatrix::zeros(p * p, n);
    for i in 0..n {
        let mut col = out.column_mut(i);
        for k in 0..p {
            let xk = x[(i, k)] * scale;
            for j in 0..p {
                col[j + k * p] = x[(i, j)] * xk;
            }
        }
    }
    out
}

fn reshape_symmetric<T: Real>(vec_b: &DVector<T>, p: usize) -> Result<CoefMatrix<T>> {
    let b = DMatrix::from_column_slice(p, p, vec_b.as_slice());
    CoefMatrix::from_matrix(symmetrize(&b))
}

/// Ridge solution by one of the reference variants (or the structured one).
pub fn ridge_reference<T: Real>(
    data: &Dataset<T>,
    lambda: T,
    variant: RidgeVariant,
    guard: &MemoryGuard,
) -> Result<CoefMatrix<T>> {
    positive("lambda", lambda)?;
    let (n, p) = (data.n(), data.p());
    guard.check(variant, n, p)?;
    if variant == RidgeVariant::Structured {
        let pre = Precomputation::new(data);
        return ridge_structured(&pre, data, lambda);
    }

    let xx = interaction_design(data);
    let y_scaled = data.response() / T::from_count(n).sqrt();
    let vec_d = &xx * &y_scaled;

    let vec_b = match variant {
        RidgeVariant::Naive => {
            let mut m = &xx * xx.transpose();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda;
            }
            Cholesky::new(m)
                .ok_or_else(|| Error::Numerical("naive ridge system not positive definite".into()))?
                .solve(&vec_d)
        }
        RidgeVariant::Woodbury => {
            let xt = xx.transpose();
            let mut inner = &xt * &xx;
            for i in 0..n {
                inner[(i, i)] += lambda;
            }
            let z = Cholesky::new(inner)
                .ok_or_else(|| Error::Numerical("Woodbury inner system not positive definite".into()))?
                .solve(&(&xt * &vec_d));
            (vec_d - &xx * z) / lambda
        }
        RidgeVariant::Svd => {
            if n <= p * p {
                // Right singular vectors and squared singular values from the
                // n x n cross-product; U Lambda = 𝕏 V is applied implicitly.
                let xt = xx.transpose();
                let eig = SymmetricEigen::new(&xt * &xx);
                let v = eig.eigenvectors;
                let mut coef = v.tr_mul(&y_scaled);
                for (c, &mu) in coef.iter_mut().zip(eig.eigenvalues.iter()) {
                    *c /= mu.max(T::zero()) + lambda;
                }
                &xx * (v * coef)
            } else {
                let svd = SVD::try_new(xx, true, true, T::default_epsilon(), 0)
                    .ok_or_else(|| Error::Numerical("SVD of interaction design failed".into()))?;
                let u = svd.u.expect("requested U");
                let v_t = svd.v_t.expect("requested V'");
                let mut coef = v_t * &y_scaled;
                for (c, &s) in coef.iter_mut().zip(svd.singular_values.iter()) {
                    *c *= s / (s * s + lambda);
                }
                u * coef
            }
        }
        RidgeVariant::Structured => unreachable!(),
    };
    reshape_symmetric(&vec_b, p)
}
