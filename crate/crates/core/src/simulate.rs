//! Synthetic designs with AR(1)-correlated Gaussian covariates and the three
//! toy response models with known coefficient matrices.
//!
//! Covariates are 1-based in the model formulas (`X1`, `X5`, `X10`) and sit at
//! indices 1, 5 and 10 of the intercept-augmented coefficient matrix.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the `SimSpec` seed; standard
//! normals are drawn with `rand_distr::StandardNormal` (ziggurat transform of
//! uniform deviates). Output is bit-reproducible for a given seed and build.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{fitted_values, CoefMatrix, Dataset};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `2X1 - 2X5 + 2X10 + 3X1X5 - 2.5X5^2 + 4X5X10`, strong heredity.
    Strong,
    /// `-2X5 + 3X1X5 - 2.5X5^2 + 4X5X10`, weak heredity.
    Weak,
    /// `3X1X5 - 2.5X5^2 + 4X5X10`, interactions only.
    InteractionOnly,
}

impl Model {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Model::Strong),
            2 => Ok(Model::Weak),
            3 => Ok(Model::InteractionOnly),
            _ => Err(Error::param("model", format!("expected 1, 2 or 3, got {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Model::Strong => 1,
            Model::Weak => 2,
            Model::InteractionOnly => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub model: Model,
    pub n: usize,
    /// Raw covariate count, before the intercept column is added.
    pub p: usize,
    pub corr: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(model: Model, n: usize, p: usize, seed: u64) -> Self {
        SimSpec {
            model,
            n,
            p,
            corr: 0.5,
            noise_sd: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if self.p < 10 {
            return Err(Error::param("p", format!("models use X10, need p >= 10, got {}", self.p)));
        }
        if !(self.corr > -1.0 && self.corr < 1.0) {
            return Err(Error::param("corr", format!("must lie in (-1, 1), got {}", self.corr)));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::param("noise_sd", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// `Sigma = (corr^|k-l|)`.
pub fn ar1_covariance(p: usize, corr: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |k, l| corr.powi(k.abs_diff(l) as i32))
}

/// Generates an independent stream for the design and one for the noise so
/// that changing the model does not change the covariates.
fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut design = ChaCha8Rng::seed_from_u64(seed);
    design.set_stream(0);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(1);
    (design, noise)
}

/// `n x p` raw design, rows drawn i.i.d. from `N(0, Sigma)` via the lower
/// Cholesky factor of `Sigma`.
pub fn gen_design<T: Real>(spec: &SimSpec) -> Result<DMatrix<T>> {
    spec.validate()?;
    let sigma = ar1_covariance(spec.p, spec.corr);
    let l = Cholesky::new(sigma)
        .ok_or_else(|| Error::Numerical("AR(1) covariance not positive definite".into()))?
        .l();
    let (mut rng, _) = rngs(spec.seed);
    let z = DMatrix::<f64>::from_fn(spec.n, spec.p, |_, _| StandardNormal.sample(&mut rng));
    // rows z_i' L' have covariance L L' = Sigma
    let x = z * l.transpose();
    Ok(x.map(T::lit))
}

/// Symmetric true coefficient matrix of dimension `p + 1` (intercept first).
///
/// A linear coefficient `c` on `Xj` is stored as `c/2` at `[0,j]` and `[j,0]`;
/// an interaction coefficient `c` on `Xj Xk` as `c/2` at `[j,k]` and `[k,j]`;
/// a squared-term coefficient on the diagonal.
pub fn truth_matrix<T: Real>(model: Model, p: usize) -> Result<CoefMatrix<T>> {
    if p < 10 {
        return Err(Error::param("p", format!("models use X10, need p >= 10, got {p}")));
    }
    let mut b = DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut set = |j: usize, k: usize, v: f64| {
        b[(j, k)] = v;
        b[(k, j)] = v;
    };
    let linear: &[(usize, f64)] = match model {
        Model::Strong => &[(1, 2.0), (5, -2.0), (10, 2.0)],
        Model::Weak => &[(5, -2.0)],
        Model::InteractionOnly => &[],
    };
    for &(j, c) in linear {
        set(0, j, c / 2.0);
    }
    set(1, 5, 1.5);
    set(5, 5, -2.5);
    set(5, 10, 2.0);
    CoefMatrix::from_matrix(b.map(T::lit))
}

/// Response `y_i = x~_i' B* x~_i + e_i`, `x~_i = (1, x_i)`, and the truth.
pub fn gen_response<T: Real>(spec: &SimSpec, raw: &DMatrix<T>) -> Result<(DVector<T>, CoefMatrix<T>)> {
    spec.validate()?;
    if raw.ncols() != spec.p || raw.nrows() != spec.n {
        return Err(Error::DimensionMismatch {
            what: "simulated design columns",
            expected: spec.p,
            found: raw.ncols(),
        });
    }
    let truth = truth_matrix::<T>(spec.model, spec.p)?;
    let probe = Dataset::from_raw(raw.clone(), DVector::zeros(spec.n), true)?;
    let mut y = fitted_values(&probe, &truth)?;
    if spec.noise_sd > 0.0 {
        let (_, mut rng) = rngs(spec.seed);
        for v in y.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += T::lit(spec.noise_sd * e);
        }
    }
    Ok((y, truth))
}

/// Simulated dataset (intercept-augmented) together with its truth.
pub fn simulate<T: Real>(spec: &SimSpec) -> Result<(Dataset<T>, CoefMatrix<T>)> {
    let raw = gen_design::<T>(spec)?;
    let (y, truth) = gen_response(spec, &raw)?;
    Ok((Dataset::from_raw(raw, y, true)?, truth))
}
