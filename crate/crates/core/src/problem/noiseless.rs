use alloc::vec::Vec;

use super::{Problem, Sample, SamplingMode};
use crate::dense::Matrix;

/// An expectation problem with a closed-form noiseless objective, seen as
/// a one-sample finite sum whose only sample evaluates that objective. Full
/// batch runs on it are deterministic SQP on the true problem.
#[derive(Debug, Clone)]
pub struct Noiseless<P> {
    inner: P,
}

impl<P: Problem> Noiseless<P> {
    /// `None` unless `inner` is an expectation problem that knows its
    /// noiseless objective.
    pub fn new(inner: P) -> Option<Self> {
        let known = inner.true_value_grad(&inner.initial_point()).is_some();
        (known && inner.sampling_mode() == SamplingMode::Expectation).then_some(Self { inner })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn truth(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.inner.true_value_grad(x).expect("checked at construction")
    }
}

impl<P: Problem> Problem for Noiseless<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_eq(&self) -> usize {
        self.inner.num_eq()
    }

    fn num_ineq(&self) -> usize {
        self.inner.num_ineq()
    }

    fn sampling_mode(&self) -> SamplingMode {
        SamplingMode::FiniteSum { size: 1 }
    }

    fn sample_value(&self, x: &[f64], _sample: &Sample) -> f64 {
        self.truth(x).0
    }

    fn sample_value_grad_acc(&self, x: &[f64], _sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        let (f, g) = self.truth(x);
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += weight * b);
        f
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        self.inner.constraints(x, c_eq, c_in)
    }

    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        self.inner.jacobians(x, j_eq, j_in)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }

    fn true_value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some(self.truth(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{hock_schittkowski, AugmentedProblem, NoisyQuadratic, NoisyQuadraticSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_sample_is_the_true_objective() {
        let p = Noiseless::new(AugmentedProblem::new(hock_schittkowski("hs71").unwrap(), 0.1)).unwrap();
        let x = [1.5, 4.0, 4.0, 1.5];
        let mut g = [1.0; 4];
        let f = p.sample_value_grad_acc(&x, &Sample::Index(0), 2.0, &mut g);
        let (tf, tg) = p.inner().true_value_grad(&x).unwrap();
        assert_eq!(f, tf);
        for i in 0..4 {
            assert_eq!(g[i], 1.0 + 2.0 * tg[i]);
        }
        assert_eq!(p.sampling_mode().dataset_cap(), Some(1));
    }

    #[test]
    fn finite_sum_problems_are_refused() {
        let q = NoisyQuadratic::generate(&NoisyQuadraticSpec { num_samples: 10, ..Default::default() }, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!(Noiseless::new(q).is_none());
    }
}
