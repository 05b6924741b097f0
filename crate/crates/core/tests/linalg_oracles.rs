mod support;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rasqp_core::linalg::{least_squares_dual, minres_solve, to_dense, LbfgsModel, MinresOptions, StopReason};
use rasqp_core::{Counters, Matrix};
use support::*;

#[test]
fn minres_matches_lu_on_random_symmetric_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(2..=50usize);
        let a = random_symmetric(&mut rng, n);
        let sv = a.singular_values();
        let cond = sv.max() / sv.min();
        if !(cond < 1e4) {
            continue;
        }
        let b = gauss_vec(&mut rng, n);
        let exact = a.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let mut counters = Counters::default();
        let rep = minres_solve(&from_na(&a), &b, MinresOptions { tol: 1e-10, max_iter: 20 * n }, None, &mut counters).unwrap();
        assert_eq!(rep.stop_reason, StopReason::ExactTol, "n={n} cond={cond:e}");
        assert!(rep.residual_norm <= 1e-10 * norm(&b) * (1.0 + 1e-9));
        let err = norm(&sub(&rep.solution, exact.as_slice())) / exact.norm();
        assert!(err <= 1e-8 * cond.max(1.0), "forward error {err:e}, cond {cond:e}");
        assert_eq!(counters.minres_iters, rep.iterations as u64);
        checked += 1;
    }
}

#[test]
fn minres_residual_is_the_explicit_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = random_symmetric(&mut rng, 8);
    let b = gauss_vec(&mut rng, 8);
    let m = from_na(&a);
    let rep = minres_solve(&m, &b, MinresOptions { tol: 1e-3, max_iter: 3 }, None, &mut Counters::default()).unwrap();
    let r = sub(&m.mul_vec(&rep.solution), &b);
    assert!(norm(&sub(&r, &rep.residual)) <= 1e-12 * (1.0 + norm(&b)));
    assert!((rep.residual_norm - norm(&r)).abs() <= 1e-12 * (1.0 + norm(&b)));
}

fn random_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let q = to_na(&gauss_matrix(rng, n, n));
    let spd = &q * q.transpose() + nalgebra::DMatrix::identity(n, n) * 0.5;
    (0..count)
        .map(|_| {
            let s = gauss_vec(rng, n);
            let y = (&spd * DVector::from_column_slice(&s)).as_slice().to_vec();
            (s, y)
        })
        .collect()
}

#[test]
fn lbfgs_matches_dense_bfgs_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.random_range(2..=20usize);
        let cap = rng.random_range(1..=n);
        let count = rng.random_range(1..=2 * n);
        let pairs = random_pairs(&mut rng, n, count);
        let mut model = LbfgsModel::new(n, cap);
        for (s, y) in &pairs {
            assert!(model.update(s, y));
        }
        let kept = &pairs[pairs.len().saturating_sub(cap)..];
        let oracle = dense_bfgs(n, kept);
        let got = to_na(&to_dense(&model));
        let scale = oracle.amax().max(1.0);
        assert!((&got - &oracle).amax() <= 1e-10 * scale, "diff {:e}", (&got - &oracle).amax());
        for _ in 0..3 {
            let v = gauss_vec(&mut rng, n);
            let bv = model.apply_vec(&v);
            let ov = &oracle * DVector::from_column_slice(&v);
            assert!(norm(&sub(&bv, ov.as_slice())) <= 1e-10 * scale * norm(&v));
        }
    }
}

#[test]
fn lbfgs_skips_pairs_without_curvature() {
    let mut model = LbfgsModel::new(3, 3);
    assert!(!model.update(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]));
    assert!(!model.update(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]));
    assert!(model.is_empty());
    assert_eq!(to_dense(&model), Matrix::identity(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lbfgs_stays_positive_definite(seed in any::<u64>(), n in 1usize..8, count in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = LbfgsModel::with_default_memory(n);
        for _ in 0..count {
            let s = gauss_vec(&mut rng, n);
            let y = gauss_vec(&mut rng, n);
            model.update(&s, &y);
        }
        let b = to_na(&to_dense(&model));
        prop_assert!((&b - b.transpose()).amax() <= 1e-9 * b.amax().max(1.0));
        let eig = b.symmetric_eigenvalues();
        prop_assert!(eig.min() > 0.0, "min eigenvalue {}", eig.min());
    }
}

#[test]
fn least_squares_dual_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let n = rng.random_range(2..=8usize);
        let m = rng.random_range(1..=n);
        let j = gauss_matrix(&mut rng, m, n);
        let g = gauss_vec(&mut rng, n);
        let lam = least_squares_dual(&j, &g).unwrap();
        let jn = to_na(&j);
        let oracle = (&jn * jn.transpose()).lu().solve(&(-(&jn * DVector::from_column_slice(&g)))).unwrap();
        assert!(norm(&sub(&lam, oracle.as_slice())) <= 1e-8 * (1.0 + oracle.norm()));
        // the stationarity residual is orthogonal to the row space
        let r = jn.transpose() * DVector::from_column_slice(&lam) + DVector::from_column_slice(&g);
        assert!((&jn * r).amax() <= 1e-9 * (1.0 + norm(&g)));
    }
}

#[test]
fn least_squares_dual_rejects_dependent_rows() {
    let j = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
    assert!(least_squares_dual(&j, &[1.0, 1.0]).is_err());
}
