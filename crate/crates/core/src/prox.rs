//! Proximal operators of the norms used as penalties.
//!
//! Each operator computes `argmin_b  lambda * f(b) + 1/2 ||b - a||^2` for a
//! threshold `lambda` wrapped in a validated [`ProxScale`].

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Non-negative, finite threshold passed to a proximal operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxScale<T: Real>(T);

impl<T: Real> ProxScale<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        Ok(ProxScale(lambda))
    }

    pub fn zero() -> Self {
        ProxScale(T::zero())
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// `sign(a) * max(|a| - t, 0)`. Entries with `|a| == t` go to exactly zero.
#[inline]
pub fn soft<T: Real>(a: T, t: T) -> T {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        T::zero()
    }
}

/// Entrywise soft thresholding, the prox of `lambda * ||B||_1`.
pub fn soft_threshold<T: Real>(a: &DMatrix<T>, scale: ProxScale<T>) -> DMatrix<T> {
    let t = scale.get();
    a.map(|v| soft(v, t))
}

/// Singular value soft thresholding, the prox of `lambda * ||B||_*`.
pub fn prox_nuclear<T: Real>(a: &DMatrix<T>, scale: ProxScale<T>) -> Result<DMatrix<T>> {
    let t = scale.get();
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(a.clone());
    }
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge in nuclear-norm prox".into()))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V'");
    let mut out = DMatrix::zeros(rows, cols);
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        let shrunk = sigma - t;
        if shrunk > T::zero() {
            out += (u.column(i) * v_t.row(i)) * shrunk;
        }
    }
    Ok(out)
}

/// Block soft thresholding, the prox of `lambda * ||b||_2`.
pub fn prox_group_l2<T: Real>(a: &[T], scale: ProxScale<T>) -> Vec<T> {
    let norm = a.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
    let t = scale.get();
    if norm <= t {
        return vec![T::zero(); a.len()];
    }
    let factor = T::one() - t / norm;
    a.iter().map(|&v| v * factor).collect()
}

/// Euclidean projection onto `{b : ||b||_1 <= radius}` by sorting the
/// magnitudes and scanning for the threshold.
pub fn project_l1_ball<T: Real>(a: &[T], radius: ProxScale<T>) -> Vec<T> {
    let theta = l1_ball_threshold(a, radius.get());
    match theta {
        None => a.to_vec(),
        Some(theta) => a.iter().map(|&v| soft(v, theta)).collect(),
    }
}

/// Threshold `theta >= 0` with `sum_i (|a_i| - theta)_+ = radius`, or `None`
/// when `a` already lies in the ball.
fn l1_ball_threshold<T: Real>(a: &[T], radius: T) -> Option<T> {
    let l1 = a.iter().fold(T::zero(), |acc, &v| acc + v.abs());
    if l1 <= radius {
        return None;
    }
    let mut mags: Vec<T> = a.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap_or(Ordering::Equal));

    // the largest magnitude is always in the active set when l1 > radius
    let mut cumulative = mags[0];
    let mut theta = cumulative - radius;
    for (j, &u) in mags.iter().enumerate().skip(1) {
        cumulative += u;
        let candidate = (cumulative - radius) / T::from_count(j + 1);
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    Some(theta.max(T::zero()))
}

/// Prox of `lambda * ||b||_inf`, via the Moreau decomposition
/// `prox(a) = a - P_{||.||_1 <= lambda}(a)`. Zero whenever
/// `lambda >= ||a||_1`.
pub fn prox_linf<T: Real>(a: &[T], scale: ProxScale<T>) -> Vec<T> {
    let projected = project_l1_ball(a, scale);
    a.iter().zip(projected).map(|(&ai, pi)| ai - pi).collect()
}

/// Bisection tolerance on the split point of the hybrid prox.
const HYBRID_TOL: f64 = 1e-10;

/// Prox of `lambda * max(|b_1|, ||b_{-1}||_1)`.
///
/// The solution is `(soft(a_1, t), soft(a_{-1}, lambda - t))` where `t`
/// minimizes the convex function
/// `h(t) = soft(a_1, t)^2 + ||soft(a_{-1}, lambda - t)||^2` on `[0, lambda]`.
/// `t` is located by bisection on the nondecreasing derivative `h'`.
pub fn prox_hybrid_l1_linf<T: Real>(a: &[T], scale: ProxScale<T>) -> Vec<T> {
    let lambda = scale.get();
    let Some((&head, tail)) = a.split_first() else {
        return Vec::new();
    };
    let tail_max = tail.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if lambda >= head.abs() + tail_max {
        return vec![T::zero(); a.len()];
    }
    if lambda == T::zero() {
        return a.to_vec();
    }

    let head_abs = head.abs();
    // h'(t) / 2
    let slope = |t: T| -> T {
        let s = lambda - t;
        let tail_sum = tail
            .iter()
            .fold(T::zero(), |acc, v| acc + (v.abs() - s).max(T::zero()));
        tail_sum - (head_abs - t).max(T::zero())
    };

    let t = if slope(T::zero()) >= T::zero() {
        T::zero()
    } else if slope(lambda) <= T::zero() {
        lambda
    } else {
        let tol = T::lit(HYBRID_TOL) * lambda.max(T::one());
        let (mut lo, mut hi) = (T::zero(), lambda);
        let half = T::lit(0.5);
        while hi - lo > tol {
            let mid = (lo + hi) * half;
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * half
    };

    let mut out = Vec::with_capacity(a.len());
    out.push(soft(head, t));
    out.extend(tail.iter().map(|&v| soft(v, lambda - t)));
    out
}
