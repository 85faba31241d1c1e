//! Test-only oracles. Everything here works on the explicit vectorized
//! problem and shares no code path with the library solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use quadreg::{CoefMatrix, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let m = normal_matrix(rng, p, p);
    (&m + m.transpose()) * 0.5
}

/// Intercept-augmented dataset of total dimension `p` with a quadratic signal
/// from a random sparse symmetric matrix plus unit noise.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset<f64> {
    let raw = normal_matrix(rng, n, p - 1);
    let mut design = DMatrix::from_element(n, p, 1.0);
    design.columns_mut(1, p - 1).copy_from(&raw);
    let mut b = DMatrix::zeros(p, p);
    for _ in 0..p {
        let j = rng.random_range(0..p);
        let k = rng.random_range(0..p);
        let v: f64 = rng.sample::<f64, _>(StandardNormal) * 2.0;
        b[(j, k)] = v;
        b[(k, j)] = v;
    }
    let y = DVector::from_fn(n, |i, _| {
        let x = design.row(i);
        (x * &b * x.transpose())[(0, 0)] + rng.sample::<f64, _>(StandardNormal)
    });
    Dataset::new(design, y, true).unwrap()
}

/// Row `i` is `vec(x_i x_i')`, unscaled.
pub fn kron_rows(data: &Dataset<f64>) -> DMatrix<f64> {
    let (n, p) = (data.n(), data.p());
    let x = data.design();
    DMatrix::from_fn(n, p * p, |i, idx| {
        let (j, k) = (idx % p, idx / p);
        x[(i, j)] * x[(i, k)]
    })
}

/// Solves `(n^{-1} F'F + shift I) vec(B) = n^{-1} F'y + shift vec(A)` by LU.
pub fn brute_force_prox(data: &Dataset<f64>, a: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let (n, p) = (data.n() as f64, data.p());
    let f = kron_rows(data);
    let mut lhs = f.transpose() * &f / n;
    for i in 0..p * p {
        lhs[(i, i)] += shift;
    }
    let rhs = f.transpose() * data.response() / n
        + DVector::from_column_slice(a.as_slice()) * shift;
    let sol = lhs.lu().solve(&rhs).expect("nonsingular");
    DMatrix::from_column_slice(p, p, sol.as_slice())
}

pub fn brute_force_ridge(data: &Dataset<f64>, lambda: f64) -> DMatrix<f64> {
    brute_force_prox(data, &DMatrix::zeros(data.p(), data.p()), lambda)
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Loss on the vectorized problem: `(2n)^{-1} ||y - F vec(B)||^2`.
pub fn vectorized_loss(data: &Dataset<f64>, f: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    (data.response() - f * b).norm_squared() / (2.0 * data.n() as f64)
}

/// FISTA with adaptive restart for `loss + lambda * sum_{masked} |b|`, where
/// the intercept entry is unpenalized when `free_intercept`.
pub fn fista_l1(data: &Dataset<f64>, lambda: f64, free_intercept: bool) -> (DMatrix<f64>, f64) {
    let (n, p) = (data.n() as f64, data.p());
    let f = kron_rows(data);
    let hess = f.transpose() * &f / n;
    let lip = hess.symmetric_eigenvalues().max();
    let step = 1.0 / lip;
    let grad = |b: &DVector<f64>| f.transpose() * (&f * b - data.response()) / n;
    let penal = |b: &DVector<f64>| {
        b.iter()
            .enumerate()
            .filter(|(i, _)| !(free_intercept && *i == 0))
            .map(|(_, v)| v.abs())
            .sum::<f64>()
    };
    let obj = |b: &DVector<f64>| vectorized_loss(data, &f, b) + lambda * penal(b);
    let prox = |v: DVector<f64>| {
        DVector::from_iterator(
            v.len(),
            v.iter()
                .enumerate()
                .map(|(i, &x)| if free_intercept && i == 0 { x } else { soft(x, step * lambda) }),
        )
    };

    let mut b = DVector::zeros(p * p);
    let mut z = b.clone();
    let mut t = 1.0f64;
    let mut last = obj(&b);
    for _ in 0..200_000 {
        let next = prox(&z - grad(&z) * step);
        let cur = obj(&next);
        if cur > last {
            // restart momentum
            z = b.clone();
            t = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &b) * ((t - 1.0) / t_next);
        let change = (&next - &b).amax();
        b = next;
        t = t_next;
        last = cur;
        if change < 1e-13 {
            break;
        }
    }
    (DMatrix::from_column_slice(p, p, b.as_slice()), last)
}

pub fn coef(m: DMatrix<f64>) -> CoefMatrix<f64> {
    CoefMatrix::from_matrix(m).unwrap()
}
