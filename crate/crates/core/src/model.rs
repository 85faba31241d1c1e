//! Data model for quadratic regression.
//!
//! A response is modelled as `y_i = x_i' B x_i + e_i` with a symmetric `p x p`
//! coefficient matrix `B`. When the design carries a leading all-ones column,
//! `B[0,0]` is the intercept, `B[0,j]` (= `B[j,0]`) holds half of the linear
//! effect of covariate `j`, off-diagonal `B[j,k]` holds half of the `x_j x_k`
//! interaction and `B[j,j]` the coefficient of `x_j^2`.
//!
//! Matrices are dense `nalgebra::DMatrix` values and therefore column-major.
//! Designs are stored `n x p`, one observation per row.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::scalar::Real;

/// Observations and response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    design: DMatrix<T>,
    response: DVector<T>,
    intercept_augmented: bool,
}

impl<T: Real> Dataset<T> {
    /// Wraps an already prepared design. If `intercept_augmented` is set, the
    /// first column must be exactly the all-ones vector.
    pub fn new(design: DMatrix<T>, response: DVector<T>, intercept_augmented: bool) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!("design must be non-empty, got {n}x{p}")));
        }
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: n,
                found: response.len(),
            });
        }
        if let Some((idx, _)) = design.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (idx % n, idx / n);
            return Err(Error::InvalidData(format!(
                "non-finite design entry at row {row}, column {col}"
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {i}")));
        }
        if intercept_augmented && design.column(0).iter().any(|&v| v != T::one()) {
            return Err(Error::InvalidData(
                "intercept-augmented design must have an all-ones first column".into(),
            ));
        }
        Ok(Dataset {
            design,
            response,
            intercept_augmented,
        })
    }

    /// Builds a dataset from raw covariates, optionally prepending the
    /// constant column.
    pub fn from_raw(raw: DMatrix<T>, response: DVector<T>, augment_intercept: bool) -> Result<Self> {
        if !augment_intercept {
            return Self::new(raw, response, false);
        }
        let (n, q) = raw.shape();
        let mut design = DMatrix::from_element(n, q + 1, T::one());
        design.columns_mut(1, q).copy_from(&raw);
        Self::new(design, response, true)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<T> {
        &self.design
    }

    pub fn response(&self) -> &DVector<T> {
        &self.response
    }

    pub fn intercept_augmented(&self) -> bool {
        self.intercept_augmented
    }
}

/// Centers each raw covariate column and scales it to unit sample standard
/// deviation. Constant columns are only centered.
pub fn standardize_columns<T: Real>(raw: &DMatrix<T>) -> DMatrix<T> {
    let n = raw.nrows();
    let mut out = raw.clone();
    if n < 2 {
        return out;
    }
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / T::from_count(n);
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / T::from_count(n - 1)).sqrt();
        if sd > T::zero() {
            col /= sd;
        }
    }
    out
}

/// Symmetric coefficient matrix `B`.
///
/// Construction does not enforce symmetry (intermediate ADMM blocks are not
/// symmetric), but every solver returns a matrix with
/// [`CoefMatrix::asymmetry`] below `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefMatrix<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> CoefMatrix<T> {
    pub fn zeros(p: usize) -> Self {
        CoefMatrix {
            values: DMatrix::zeros(p, p),
        }
    }

    pub fn from_matrix(values: DMatrix<T>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::DimensionMismatch {
                what: "coefficient matrix columns",
                expected: values.nrows(),
                found: values.ncols(),
            });
        }
        Ok(CoefMatrix { values })
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.values
    }

    /// `max |B_jk - B_kj|`.
    pub fn asymmetry(&self) -> T {
        asymmetry(&self.values)
    }

    /// Returns `(B + B') / 2`.
    pub fn symmetrized(&self) -> Self {
        CoefMatrix {
            values: symmetrize(&self.values),
        }
    }
}

impl<T: Real> From<CoefMatrix<T>> for DMatrix<T> {
    fn from(b: CoefMatrix<T>) -> Self {
        b.values
    }
}

pub(crate) fn asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    let p = m.nrows();
    let mut worst = T::zero();
    for k in 0..p {
        for j in (k + 1)..p {
            worst = worst.max((m[(j, k)] - m[(k, j)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    let mut out = m.clone();
    let p = m.nrows();
    for k in 0..p {
        for j in (k + 1)..p {
            let v = (m[(j, k)] + m[(k, j)]) * half;
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    out
}

/// Quantities shared by every solver on a fixed dataset.
#[derive(Debug, Clone)]
pub struct Precomputation<T: Real> {
    /// `D = n^{-1} sum_i y_i x_i x_i'`, `p x p`.
    pub d: DMatrix<T>,
    /// `X X'`, `n x n`.
    pub gram: DMatrix<T>,
    /// `G = n^{-1} (X X') o (X X')`, the Gram matrix of the interaction
    /// features `x_i (x) x_i / sqrt(n)`.
    pub g: DMatrix<T>,
}

impl<T: Real> Precomputation<T> {
    pub fn new(data: &Dataset<T>) -> Self {
        compute_precomputation(data)
    }

    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }
}

pub fn compute_precomputation<T: Real>(data: &Dataset<T>) -> Precomputation<T> {
    let x = data.design();
    let n_inv = T::one() / T::from_count(data.n());
    let d = weighted_outer_sum(x, data.response().as_slice()) * n_inv;
    let gram = x * x.transpose();
    let g = gram.map(|v| v * v * n_inv);
    Precomputation { d, gram, g }
}

/// `X' diag(w) X = sum_i w_i x_i x_i'`, exactly symmetric.
pub(crate) fn weighted_outer_sum<T: Real>(x: &DMatrix<T>, w: &[T]) -> DMatrix<T> {
    let mut scaled = x.clone();
    for (mut row, &wi) in scaled.row_iter_mut().zip(w) {
        row *= wi;
    }
    // explicit transpose: `tr_mul` does not dispatch to the blocked gemm
    let m = x.transpose() * scaled;
    symmetrize(&m)
}

/// `diag(X M X')`, i.e. `x_i' M x_i` for every row, in `O(n p^2)`.
pub(crate) fn quadratic_forms<T: Real>(x: &DMatrix<T>, m: &DMatrix<T>) -> DVector<T> {
    let xm = x * m;
    DVector::from_iterator(
        x.nrows(),
        x.row_iter().zip(xm.row_iter()).map(|(xi, xmi)| xi.dot(&xmi)),
    )
}

fn check_dims<T: Real>(data: &Dataset<T>, b: &CoefMatrix<T>) -> Result<()> {
    if b.p() != data.p() {
        return Err(Error::DimensionMismatch {
            what: "coefficient matrix dimension",
            expected: data.p(),
            found: b.p(),
        });
    }
    Ok(())
}

/// `x_i' B x_i` for every observation.
pub fn fitted_values<T: Real>(data: &Dataset<T>, b: &CoefMatrix<T>) -> Result<DVector<T>> {
    check_dims(data, b)?;
    Ok(quadratic_forms(data.design(), b.values()))
}

/// `(2n)^{-1} sum_i (y_i - x_i' B x_i)^2`.
pub fn squared_loss<T: Real>(data: &Dataset<T>, b: &CoefMatrix<T>) -> Result<T> {
    let fitted = fitted_values(data, b)?;
    let resid = data.response() - fitted;
    Ok(resid.norm_squared() / (T::lit(2.0) * T::from_count(data.n())))
}

/// Squared loss plus every penalty term of `spec`.
pub fn objective<T: Real>(data: &Dataset<T>, b: &CoefMatrix<T>, spec: &PenaltySpec<T>) -> Result<T> {
    let loss = squared_loss(data, b)?;
    Ok(spec
        .terms()
        .iter()
        .fold(loss, |acc, term| acc + crate::penalty::eval_penalty(term, b.values())))
}
