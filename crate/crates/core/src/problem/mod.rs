//! Constrained stochastic problems: `min E[F(x, ξ)]` or a finite-sum mean,
//! subject to deterministic `c_E(x) = 0` and `c_I(x) <= 0`.

mod augmented;
mod dataset;
mod eval;
mod hock_schittkowski;
mod logreg;
mod noiseless;
mod quadratic;
mod random_nlp;

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::RngCore;

use crate::dense::Matrix;

pub use augmented::{AugmentedProblem, DeterministicBase, InfeasiblePair};
pub use dataset::{synthetic_classification, Dataset, SyntheticClassSpec};
pub use eval::{
    draw_samples, eval_constraints, eval_objective, eval_subsampled, per_sample_gradients, sum_gradients,
    ConstraintEval,
};
pub use hock_schittkowski::{hock_schittkowski, HsProblem, HS_NAMES};
pub use logreg::{build_logreg_problem, ConstraintKind, LogisticRegression};
pub use noiseless::Noiseless;
pub use quadratic::{NoisyQuadratic, NoisyQuadraticSpec};
pub use random_nlp::{RandomNlp, RandomNlpSpec};

/// One realization of the randomness in the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    /// Index into a finite dataset.
    Index(usize),
    /// A scalar noise draw, realized when the sample set is created.
    Noise(f64),
}

/// An ordered sample set. Finite-sum ids are unique; noise draws are stored
/// so repeated evaluations on the same set are deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    items: Vec<Sample>,
}

impl SampleSet {
    pub fn new(items: Vec<Sample>) -> Self {
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn as_slice(&self) -> &[Sample] {
        &self.items
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Sample> {
        self.items.iter()
    }

    /// Full dataset `{0, .., n-1}` in order.
    pub fn full(n: usize) -> Self {
        Self { items: (0..n).map(Sample::Index).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    FiniteSum { size: usize },
    Expectation,
}

impl SamplingMode {
    pub fn dataset_cap(self) -> Option<usize> {
        match self {
            SamplingMode::FiniteSum { size } => Some(size),
            SamplingMode::Expectation => None,
        }
    }
}

/// Evaluators for a constrained stochastic problem.
///
/// Constraint and Jacobian evaluations must be deterministic in `x`.
pub trait Problem: Sync {
    fn dim(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn sampling_mode(&self) -> SamplingMode;

    /// Draws one noise realization. Only called for expectation problems.
    fn draw_noise(&self, _rng: &mut dyn RngCore) -> f64 {
        0.0
    }

    /// `F(x, ξ)` for a single sample.
    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64;

    /// Adds `weight * ∇F(x, ξ)` into `grad` and returns `F(x, ξ)`.
    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64;

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]);

    /// Jacobians sized `num_eq × dim` and `num_ineq × dim`.
    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix);

    fn initial_point(&self) -> Vec<f64>;

    /// Noiseless objective value and gradient, when known in closed form.
    fn true_value_grad(&self, _x: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_eq(&self) -> usize {
        (**self).num_eq()
    }
    fn num_ineq(&self) -> usize {
        (**self).num_ineq()
    }
    fn sampling_mode(&self) -> SamplingMode {
        (**self).sampling_mode()
    }
    fn draw_noise(&self, rng: &mut dyn RngCore) -> f64 {
        (**self).draw_noise(rng)
    }
    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64 {
        (**self).sample_value(x, sample)
    }
    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        (**self).sample_value_grad_acc(x, sample, weight, grad)
    }
    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        (**self).constraints(x, c_eq, c_in)
    }
    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        (**self).jacobians(x, j_eq, j_in)
    }
    fn initial_point(&self) -> Vec<f64> {
        (**self).initial_point()
    }
    fn true_value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        (**self).true_value_grad(x)
    }
}
