use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rasqp_core::problem::{
    build_logreg_problem, draw_samples, eval_constraints, eval_subsampled, hock_schittkowski, synthetic_classification,
    AugmentedProblem, ConstraintKind, DeterministicBase, InfeasiblePair, NoisyQuadratic, NoisyQuadraticSpec, Problem, RandomNlp,
    RandomNlpSpec, Sample, SampleSet, SamplingMode, SyntheticClassSpec, HS_NAMES,
};
use rasqp_core::{Counters, Matrix};

fn zoo() -> Vec<(String, Box<dyn Problem>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let data = synthetic_classification(
        &SyntheticClassSpec { n_raw_features: 4, n_classes: 3, n_samples: 60, separation: 1.0, spread: 1.0 },
        &mut rng,
    )
    .unwrap();
    let data = Arc::new(data.max_abs_scaled());
    let mut out: Vec<(String, Box<dyn Problem>)> = vec![
        ("logreg-eq".into(), Box::new(build_logreg_problem(data.clone(), ConstraintKind::Equality).unwrap())),
        ("logreg-ineq".into(), Box::new(build_logreg_problem(data, ConstraintKind::Inequality).unwrap())),
        (
            "quadratic".into(),
            Box::new(
                NoisyQuadratic::generate(&NoisyQuadraticSpec { num_samples: 50, ..Default::default() }, &mut rng).unwrap(),
            ),
        ),
        (
            "random".into(),
            Box::new(
                RandomNlp::generate(
                    &RandomNlpSpec { dim: 5, num_eq: 2, num_balls: 2, num_halfspaces: 2, num_samples: 40 },
                    &mut rng,
                )
                .unwrap(),
            ),
        ),
        ("infeasible".into(), Box::new(AugmentedProblem::new(InfeasiblePair { start: 3.0 }, 0.1))),
    ];
    for name in HS_NAMES {
        out.push((name.to_string(), Box::new(AugmentedProblem::new(hock_schittkowski(name).unwrap(), 0.1))));
    }
    out
}

fn some_samples(problem: &dyn Problem, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    match problem.sampling_mode() {
        SamplingMode::FiniteSum { size } => (0..3).map(|_| Sample::Index(rng.random_range(0..size))).collect(),
        SamplingMode::Expectation => (0..3).map(|_| Sample::Noise(rng.random_range(-0.1..0.1))).collect(),
    }
}

fn test_point(problem: &dyn Problem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    problem.initial_point().into_iter().map(|v| v + rng.random_range(-0.3..0.3)).collect()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
    let h = 1e-6 * (1.0 + x[i].abs());
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

#[test]
fn sample_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for (name, problem) in zoo() {
        let problem = problem.as_ref();
        for _ in 0..3 {
            let x = test_point(problem, &mut rng);
            for s in some_samples(problem, &mut rng) {
                let mut g = vec![0.0; problem.dim()];
                let v = problem.sample_value_grad_acc(&x, &s, 1.0, &mut g);
                assert!((v - problem.sample_value(&x, &s)).abs() <= 1e-12 * (1.0 + v.abs()), "{name}");
                for i in 0..problem.dim() {
                    let fd = central_difference(|y| problem.sample_value(y, &s), &x, i);
                    assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()), "{name} ∂{i}: analytic {} fd {fd}", g[i]);
                }
            }
        }
    }
}

#[test]
fn gradient_accumulation_is_weighted() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for (name, problem) in zoo() {
        let problem = problem.as_ref();
        let x = test_point(problem, &mut rng);
        let s = some_samples(problem, &mut rng)[0];
        let mut g1 = vec![0.0; problem.dim()];
        problem.sample_value_grad_acc(&x, &s, 1.0, &mut g1);
        let mut g = vec![1.0; problem.dim()];
        problem.sample_value_grad_acc(&x, &s, 2.5, &mut g);
        for i in 0..g.len() {
            assert!((g[i] - (1.0 + 2.5 * g1[i])).abs() <= 1e-12 * (1.0 + g1[i].abs()), "{name}");
        }
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    for (name, problem) in zoo() {
        let problem = problem.as_ref();
        let (me, mi, n) = (problem.num_eq(), problem.num_ineq(), problem.dim());
        let x = test_point(problem, &mut rng);
        let mut j_eq = Matrix::zeros(me, n);
        let mut j_in = Matrix::zeros(mi, n);
        problem.jacobians(&x, &mut j_eq, &mut j_in);
        let cons = |y: &[f64]| {
            let mut c_eq = vec![0.0; me];
            let mut c_in = vec![0.0; mi];
            problem.constraints(y, &mut c_eq, &mut c_in);
            (c_eq, c_in)
        };
        for i in 0..n {
            for r in 0..me {
                let fd = central_difference(|y| cons(y).0[r], &x, i);
                assert!((fd - j_eq[(r, i)]).abs() <= 1e-5 * (1.0 + fd.abs()), "{name} J_E[{r},{i}]");
            }
            for r in 0..mi {
                let fd = central_difference(|y| cons(y).1[r], &x, i);
                assert!((fd - j_in[(r, i)]).abs() <= 1e-5 * (1.0 + fd.abs()), "{name} J_I[{r},{i}]");
            }
        }
        let ev = eval_constraints(problem, &x).unwrap();
        assert_eq!(ev.c_eq, cons(&x).0);
        assert_eq!(ev.j_in, j_in);
    }
}

#[test]
fn full_set_mean_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for (name, problem) in zoo() {
        let problem = problem.as_ref();
        let SamplingMode::FiniteSum { size } = problem.sampling_mode() else { continue };
        let x = test_point(problem, &mut rng);
        let mut counters = Counters::default();
        let (f, g) = eval_subsampled(problem, &x, &SampleSet::full(size), &mut counters).unwrap();
        assert_eq!(counters.grad_evals, size as u64);
        let mut f_sum = 0.0;
        let mut g_sum = vec![0.0; problem.dim()];
        for i in 0..size {
            let mut gi = vec![0.0; problem.dim()];
            f_sum += problem.sample_value_grad_acc(&x, &Sample::Index(i), 1.0, &mut gi);
            g_sum.iter_mut().zip(&gi).for_each(|(a, b)| *a += b);
        }
        assert!((f - f_sum / size as f64).abs() <= 1e-12 * (1.0 + f.abs()), "{name}");
        for (a, b) in g.iter().zip(&g_sum) {
            assert!((a - b / size as f64).abs() <= 1e-12 * (1.0 + a.abs()), "{name}");
        }
    }
}

#[test]
fn augmented_noise_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    for name in HS_NAMES {
        let base = hock_schittkowski(name).unwrap();
        let problem = AugmentedProblem::new(base, 0.1);
        let x = test_point(&problem, &mut rng);
        let set = draw_samples(&problem, 4000, &mut rng, None).unwrap();
        let vals: Vec<f64> = set.iter().map(|s| problem.sample_value(&x, s)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        let se = (var / vals.len() as f64).sqrt();
        let truth = problem.true_value_grad(&x).map(|t| t.0).unwrap_or_else(|| problem.base().value(&x));
        assert!((mean - truth).abs() <= 3.0 * se + 1e-12, "{name}: mean {mean} truth {truth} se {se}");
    }
}
