//! Library results against brute-force computations on the explicit
//! vectorized problem.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use quadreg::ridge::interaction_design;
use quadreg::*;

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

#[test]
fn fitted_values_match_kron_rows() {
    let mut r = rng(1);
    for &(n, p) in &[(5, 2), (12, 4), (30, 7)] {
        let data = random_dataset(&mut r, n, p);
        let b = random_symmetric(&mut r, p);
        let f = kron_rows(&data);
        let direct = &f * DVector::from_column_slice(b.as_slice());
        let fitted = fitted_values(&data, &coef(b)).unwrap();
        assert!((direct - fitted).amax() < 1e-10);
    }
}

#[test]
fn gram_of_interaction_design_matches_precomputation() {
    let mut r = rng(2);
    for &(n, p) in &[(6, 3), (20, 5)] {
        let data = random_dataset(&mut r, n, p);
        let pre = Precomputation::new(&data);
        let xx = interaction_design(&data);
        let g = xx.transpose() * &xx;
        assert!(max_abs_diff(&g, &pre.g) < 1e-10);
        let f = kron_rows(&data);
        let d = f.transpose() * data.response() / n as f64;
        assert!(max_abs_diff(&DMatrix::from_column_slice(p, p, d.as_slice()), &pre.d) < 1e-10);
    }
}

#[test]
fn every_ridge_variant_matches_brute_force() {
    let mut r = rng(3);
    let guard = MemoryGuard::default();
    for &(n, p, lambda) in &[(8, 3, 0.5), (25, 6, 1.0), (15, 9, 3.0), (40, 4, 0.1)] {
        let data = random_dataset(&mut r, n, p);
        let oracle = brute_force_ridge(&data, lambda);
        for variant in RidgeVariant::ALL {
            let b = ridge_reference(&data, lambda, variant, &guard).unwrap();
            let err = max_abs_diff(b.values(), &oracle);
            assert!(err < 1e-8, "{variant} n={n} p={p}: {err:e}");
        }
    }
}

#[test]
fn ridge_is_stationary() {
    // gradient of loss + lambda/2 ||B||^2 vanishes at the solution
    let mut r = rng(4);
    let data = random_dataset(&mut r, 20, 5);
    let pre = Precomputation::new(&data);
    let lambda = 0.7;
    let b = ridge_structured(&pre, &data, lambda).unwrap();
    let f = kron_rows(&data);
    let vb = DVector::from_column_slice(b.values().as_slice());
    let grad = f.transpose() * (&f * &vb - data.response()) / 20.0 + &vb * lambda;
    assert!(grad.amax() < 1e-9);
}

#[test]
fn loss_prox_matches_brute_force() {
    let mut r = rng(5);
    for &(n, p, rho) in &[(10, 3, 1.0), (30, 6, 10.0), (12, 8, 0.3)] {
        let data = random_dataset(&mut r, n, p);
        let pre = Precomputation::new(&data);
        let a = random_symmetric(&mut r, p);
        let b = prox_quadratic_loss(&pre, &data, &a, rho).unwrap();
        let oracle = brute_force_prox(&data, &a, rho);
        assert!(max_abs_diff(b.values(), &oracle) < 1e-8);
    }
}

/// One consensus sweep for the `l1` preset written out from scratch.
fn oracle_sweep(
    data: &Dataset<f64>,
    lambda: f64,
    rho: f64,
    z: &DMatrix<f64>,
    u: &[DMatrix<f64>; 2],
) -> (DMatrix<f64>, [DMatrix<f64>; 2]) {
    let b0 = brute_force_prox(data, &(z - &u[0]), rho);
    let t = z - &u[1];
    let b1 = DMatrix::from_fn(t.nrows(), t.ncols(), |j, k| {
        let v = t[(j, k)];
        if j == 0 && k == 0 {
            v
        } else {
            v.signum() * (v.abs() - lambda / rho).max(0.0)
        }
    });
    let avg = (&b0 + &b1) / 2.0;
    let zn = (&avg + avg.transpose()) / 2.0;
    let un = [&u[0] + &b0 - &zn, &u[1] + &b1 - &zn];
    (zn, un)
}

#[test]
fn admm_sweeps_match_step_by_step_oracle() {
    let mut r = rng(6);
    let data = random_dataset(&mut r, 25, 5);
    let pre = Precomputation::new(&data);
    let lambda = 0.4;
    let spec = PenaltySpec::preset(Preset::L1, lambda, 0.0, MaskPolicy::ExcludeIntercept).unwrap();
    let config = AdmmConfig::default();
    let p = data.p();
    let mut state = AdmmState::zeros(p, 1);
    let mut z = DMatrix::zeros(p, p);
    let mut u = [DMatrix::zeros(p, p), DMatrix::zeros(p, p)];
    for _ in 0..15 {
        state = admm_iterate(&state, &data, &pre, &spec, &config).unwrap();
        let (zn, un) = oracle_sweep(&data, lambda, config.rho, &z, &u);
        z = zn;
        u = un;
        assert!(max_abs_diff(&state.consensus, &z) < 1e-8);
        assert!(max_abs_diff(&state.duals[0], &u[0]) < 1e-8);
        assert!(max_abs_diff(&state.duals[1], &u[1]) < 1e-8);
    }
}

#[test]
fn l1_admm_matches_proximal_gradient() {
    for seed in 0..3 {
        let mut r = rng(100 + seed);
        let data = random_dataset(&mut r, 50, 8);
        let pre = Precomputation::new(&data);
        let lmax = lambda_max_for(&pre, &data, PenaltyFamily::L1, MaskPolicy::ExcludeIntercept);
        let lambda = 0.3 * lmax;
        let spec = PenaltySpec::preset(Preset::L1, lambda, 0.0, MaskPolicy::ExcludeIntercept).unwrap();
        let sol = admm_solve(&data, &pre, &spec, &AdmmConfig::default(), None).unwrap();
        assert!(sol.converged);
        let (_, reference) = fista_l1(&data, lambda, true);
        assert!(((sol.objective - reference) / reference).abs() < 1e-6);
    }
}

#[test]
fn unpenalized_admm_reaches_least_squares() {
    // with only the loss block the consensus is the prox fixed point, i.e. a
    // least-squares minimizer; check the normal equations
    let mut r = rng(7);
    let data = random_dataset(&mut r, 40, 4);
    let pre = Precomputation::new(&data);
    let cfg = AdmmConfig { eps_abs: 1e-10, eps_rel: 1e-10, max_iter: 5000, ..AdmmConfig::default() };
    let sol = admm_solve(&data, &pre, &PenaltySpec::empty(), &cfg, None).unwrap();
    let f = kron_rows(&data);
    let vb = DVector::from_column_slice(sol.consensus.values().as_slice());
    let grad = f.transpose() * (&f * &vb - data.response()) / 40.0;
    assert!(grad.amax() < 1e-6, "{:e}", grad.amax());
}

#[test]
fn huge_lambda_shrinks_every_variant_to_zero() {
    let mut r = rng(8);
    let data = random_dataset(&mut r, 15, 6);
    for variant in RidgeVariant::ALL {
        let b = ridge_reference(&data, 1e12, variant, &MemoryGuard::default()).unwrap();
        assert!(b.values().norm() <= 1e-6, "{variant}");
    }
}
