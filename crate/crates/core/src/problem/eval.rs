use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::RngCore;

use super::{Problem, Sample, SampleSet, SamplingMode};
use crate::counters::Counters;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::all_finite;

/// Sums of `F` and `∇F` over `samples` (not averaged). Counts one gradient
/// evaluation per sample.
pub fn sum_gradients<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    samples: &[Sample],
    counters: &mut Counters,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; problem.dim()];
    let mut value = 0.0;
    for s in samples {
        let v = problem.sample_value_grad_acc(x, s, 1.0, &mut grad);
        if !v.is_finite() {
            return Err(Error::NumericalFailure { context: "objective".into(), sample: Some(*s) });
        }
        value += v;
    }
    counters.grad_evals += samples.len() as u64;
    if !all_finite(&grad) {
        // Locate the offending sample for the report.
        let mut g = vec![0.0; problem.dim()];
        let bad = samples.iter().find(|s| {
            g.iter_mut().for_each(|v| *v = 0.0);
            problem.sample_value_grad_acc(x, s, 1.0, &mut g);
            !all_finite(&g)
        });
        return Err(Error::NumericalFailure { context: "gradient".into(), sample: bad.copied() });
    }
    Ok((value, grad))
}

/// Subsampled objective `F_S(x)` and gradient `g_S(x)`: arithmetic means over `S`.
pub fn eval_subsampled<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    set: &SampleSet,
    counters: &mut Counters,
) -> Result<(f64, Vec<f64>)> {
    if set.is_empty() {
        return Err(Error::Contract("sample set must be nonempty"));
    }
    if !all_finite(x) {
        return Err(Error::Contract("iterate must be finite"));
    }
    let (v, mut g) = sum_gradients(problem, x, set.as_slice(), counters)?;
    let inv = 1.0 / set.len() as f64;
    g.iter_mut().for_each(|gi| *gi *= inv);
    Ok((v * inv, g))
}

/// Subsampled objective value only. Counts function evaluations.
pub fn eval_objective<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    set: &SampleSet,
    counters: &mut Counters,
) -> Result<f64> {
    let mut total = 0.0;
    for s in set.iter() {
        let v = problem.sample_value(x, s);
        if !v.is_finite() {
            return Err(Error::NumericalFailure { context: "objective".into(), sample: Some(*s) });
        }
        total += v;
    }
    counters.func_evals += set.len() as u64;
    Ok(total / set.len() as f64)
}

/// Per-sample gradients stored row-wise, one row per sample.
pub fn per_sample_gradients<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    samples: &[Sample],
    counters: &mut Counters,
) -> Result<(Vec<f64>, Matrix)> {
    let n = problem.dim();
    let mut rows = Matrix::zeros(samples.len(), n);
    let mut values = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let row = rows.row_mut(i);
        let v = problem.sample_value_grad_acc(x, s, 1.0, row);
        if !v.is_finite() || !all_finite(row) {
            return Err(Error::NumericalFailure { context: "per-sample gradient".into(), sample: Some(*s) });
        }
        values.push(v);
    }
    counters.grad_evals += samples.len() as u64;
    Ok((values, rows))
}

/// Constraint values and Jacobians at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    pub c_eq: Vec<f64>,
    pub c_in: Vec<f64>,
    pub j_eq: Matrix,
    pub j_in: Matrix,
}

impl ConstraintEval {
    /// `‖(c_E, [c_I]_+)‖_∞`
    pub fn violation_inf(&self) -> f64 {
        let e = crate::math::norm_inf(&self.c_eq);
        self.c_in.iter().fold(e, |m, &v| m.max(v.max(0.0)))
    }

    /// `‖(c_E, [c_I]_+)‖_1`
    pub fn violation_l1(&self) -> f64 {
        crate::math::norm1(&self.c_eq) + self.c_in.iter().map(|&v| v.max(0.0)).sum::<f64>()
    }
}

pub fn eval_constraints<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> Result<ConstraintEval> {
    if !all_finite(x) {
        return Err(Error::Contract("iterate must be finite"));
    }
    let (n, me, mi) = (problem.dim(), problem.num_eq(), problem.num_ineq());
    let mut c_eq = vec![0.0; me];
    let mut c_in = vec![0.0; mi];
    problem.constraints(x, &mut c_eq, &mut c_in);
    let mut j_eq = Matrix::zeros(me, n);
    let mut j_in = Matrix::zeros(mi, n);
    problem.jacobians(x, &mut j_eq, &mut j_in);
    if !all_finite(&c_eq) || !all_finite(&c_in) || !j_eq.is_finite() || !j_in.is_finite() {
        return Err(Error::numerical("constraint evaluation"));
    }
    Ok(ConstraintEval { c_eq, c_in, j_eq, j_in })
}

/// Draws a sample set of `size`, keeping `superset_of` as its prefix.
///
/// Finite-sum problems sample indices uniformly without replacement;
/// expectation problems draw i.i.d. noise realizations.
pub fn draw_samples<P: Problem + ?Sized, R: RngCore + ?Sized>(
    problem: &P,
    size: usize,
    rng: &mut R,
    superset_of: Option<&SampleSet>,
) -> Result<SampleSet> {
    let keep = superset_of.map_or(0, |s| s.len());
    if size < keep {
        return Err(Error::Config(format!("requested {size} samples but the required subset has {keep}")));
    }
    let mut items: Vec<Sample> = superset_of.map(|s| s.as_slice().to_vec()).unwrap_or_default();
    if size == keep {
        return Ok(SampleSet::new(items));
    }
    let extra = size - keep;
    let mut rng = rng;
    match problem.sampling_mode() {
        SamplingMode::FiniteSum { size: total } => {
            if size > total {
                return Err(Error::Config(format!("requested {size} samples from a dataset of {total}")));
            }
            let mut taken = vec![false; total];
            for s in &items {
                match *s {
                    Sample::Index(i) if i < total && !taken[i] => taken[i] = true,
                    _ => return Err(Error::Contract("superset must hold unique in-range indices")),
                }
            }
            let pool: Vec<usize> = (0..total).filter(|&i| !taken[i]).collect();
            let picked = index::sample(&mut rng, pool.len(), extra);
            items.extend(picked.into_iter().map(|p| Sample::Index(pool[p])));
        }
        SamplingMode::Expectation => {
            for _ in 0..extra {
                let dyn_rng: &mut dyn RngCore = &mut rng;
                items.push(Sample::Noise(problem.draw_noise(dyn_rng)));
            }
        }
    }
    Ok(SampleSet::new(items))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AugmentedProblem, InfeasiblePair, NoisyQuadratic, NoisyQuadraticSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad(samples: usize) -> NoisyQuadratic {
        let spec = NoisyQuadraticSpec { num_samples: samples, ..Default::default() };
        NoisyQuadratic::generate(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    /// Blows up at one sample index.
    struct Poisoned;
    impl Problem for Poisoned {
        fn dim(&self) -> usize {
            1
        }
        fn num_eq(&self) -> usize {
            0
        }
        fn num_ineq(&self) -> usize {
            0
        }
        fn sampling_mode(&self) -> SamplingMode {
            SamplingMode::FiniteSum { size: 3 }
        }
        fn sample_value(&self, x: &[f64], _: &Sample) -> f64 {
            x[0]
        }
        fn sample_value_grad_acc(&self, x: &[f64], s: &Sample, w: f64, g: &mut [f64]) -> f64 {
            g[0] += if *s == Sample::Index(2) { f64::NAN } else { w };
            x[0]
        }
        fn constraints(&self, _: &[f64], _: &mut [f64], _: &mut [f64]) {}
        fn jacobians(&self, _: &[f64], _: &mut Matrix, _: &mut Matrix) {}
        fn initial_point(&self) -> Vec<f64> {
            vec![0.0]
        }
    }

    #[test]
    fn same_size_superset_is_returned_unchanged() {
        let p = quad(50);
        let base = draw_samples(&p, 10, &mut ChaCha8Rng::seed_from_u64(1), None).unwrap();
        let again = draw_samples(&p, 10, &mut ChaCha8Rng::seed_from_u64(2), Some(&base)).unwrap();
        assert_eq!(base, again);
        let grown = draw_samples(&p, 20, &mut ChaCha8Rng::seed_from_u64(2), Some(&base)).unwrap();
        assert_eq!(&grown.as_slice()[..10], base.as_slice());
    }

    #[test]
    fn full_batch_takes_every_index_once() {
        let p = quad(50);
        let s = draw_samples(&p, 50, &mut ChaCha8Rng::seed_from_u64(1), None).unwrap();
        let mut ids: Vec<usize> = s.iter().map(|s| match *s {
            Sample::Index(i) => i,
            Sample::Noise(_) => unreachable!(),
        }).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
        assert!(draw_samples(&p, 51, &mut ChaCha8Rng::seed_from_u64(1), None).is_err());
    }

    #[test]
    fn draws_are_reproducible() {
        let p = quad(50);
        let a = draw_samples(&p, 17, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
        let b = draw_samples(&p, 17, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
        assert_eq!(a, b);
        let e = AugmentedProblem::new(InfeasiblePair { start: 0.0 }, 0.1);
        let a = draw_samples(&e, 5, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
        let b = draw_samples(&e, 5, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subsampled_mean_counts_every_sample() {
        let p = quad(20);
        let full = SampleSet::full(20);
        let mut c = Counters::default();
        let x = p.initial_point();
        let (_, g) = eval_subsampled(&p, &x, &full, &mut c).unwrap();
        assert_eq!(c.grad_evals, 20);
        let (_, gt) = p.true_value_grad(&x).unwrap();
        for (a, b) in g.iter().zip(&gt) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_gradient_names_the_sample() {
        let err = eval_subsampled(&Poisoned, &[0.0], &SampleSet::full(3), &mut Counters::default()).unwrap_err();
        assert_eq!(err, Error::NumericalFailure { context: "gradient".into(), sample: Some(Sample::Index(2)) });
    }
}
