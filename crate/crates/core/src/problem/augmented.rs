use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Problem, Sample, SamplingMode};
use crate::dense::Matrix;

/// A deterministic smooth problem `min f(x) s.t. c_E(x) = 0, c_I(x) <= 0`.
pub trait DeterministicBase: Sync {
    fn dim(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    /// Adds `weight * ∇f(x)` to `grad` and returns `f(x)`.
    fn value_grad_acc(&self, x: &[f64], weight: f64, grad: &mut [f64]) -> f64;
    fn value(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.dim()];
        self.value_grad_acc(x, 0.0, &mut scratch)
    }
    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]);
    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix);
    fn initial_point(&self) -> Vec<f64>;
}

/// Noise-augmented objective `F(x, ξ) = f(x) + ξ ‖x - x_init - 1‖²` with
/// `ξ ~ U[-noise_level, noise_level]`, so `E[F(x, ξ)] = f(x)`.
///
/// The noise grows with distance from the offset start, and is nonzero even
/// at `x_init`.
#[derive(Debug, Clone)]
pub struct AugmentedProblem<B> {
    base: B,
    x_init: Vec<f64>,
    noise_level: f64,
}

impl<B: DeterministicBase> AugmentedProblem<B> {
    /// Uses the base problem's own starting point as `x_init`.
    pub fn new(base: B, noise_level: f64) -> Self {
        let x_init = base.initial_point();
        Self::with_start(base, x_init, noise_level)
    }

    pub fn with_start(base: B, x_init: Vec<f64>, noise_level: f64) -> Self {
        assert!(noise_level >= 0.0, "noise level must be nonnegative");
        assert_eq!(x_init.len(), base.dim());
        Self { base, x_init, noise_level }
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    fn xi(sample: &Sample) -> f64 {
        match *sample {
            Sample::Noise(xi) => xi,
            Sample::Index(_) => panic!("augmented problems are expectation problems"),
        }
    }
}

impl<B: DeterministicBase> Problem for AugmentedProblem<B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn num_eq(&self) -> usize {
        self.base.num_eq()
    }

    fn num_ineq(&self) -> usize {
        self.base.num_ineq()
    }

    fn sampling_mode(&self) -> SamplingMode {
        SamplingMode::Expectation
    }

    fn draw_noise(&self, rng: &mut dyn RngCore) -> f64 {
        if self.noise_level == 0.0 {
            0.0
        } else {
            rng.random_range(-self.noise_level..=self.noise_level)
        }
    }

    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64 {
        let xi = Self::xi(sample);
        let offset: f64 = x.iter().zip(&self.x_init).map(|(a, b)| (a - b - 1.0) * (a - b - 1.0)).sum();
        self.base.value(x) + xi * offset
    }

    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        let xi = Self::xi(sample);
        let f = self.base.value_grad_acc(x, weight, grad);
        let mut offset = 0.0;
        for ((g, a), b) in grad.iter_mut().zip(x).zip(&self.x_init) {
            let u = a - b - 1.0;
            offset += u * u;
            *g += weight * 2.0 * xi * u;
        }
        f + xi * offset
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        self.base.constraints(x, c_eq, c_in)
    }

    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        self.base.jacobians(x, j_eq, j_in)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.x_init.clone()
    }

    fn true_value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut g = vec![0.0; self.dim()];
        let f = self.base.value_grad_acc(x, 1.0, &mut g);
        Some((f, g))
    }
}

/// `min ½x² s.t. x = 0, x - 1 = 0`: a one-dimensional problem with
/// inconsistent constraints whose violation is stationary at `x = ½`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InfeasiblePair {
    pub start: f64,
}

impl DeterministicBase for InfeasiblePair {
    fn dim(&self) -> usize {
        1
    }
    fn num_eq(&self) -> usize {
        2
    }
    fn num_ineq(&self) -> usize {
        0
    }
    fn value_grad_acc(&self, x: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
        grad[0] += weight * x[0];
        0.5 * x[0] * x[0]
    }
    fn constraints(&self, x: &[f64], c_eq: &mut [f64], _c_in: &mut [f64]) {
        c_eq[0] = x[0];
        c_eq[1] = x[0] - 1.0;
    }
    fn jacobians(&self, _x: &[f64], j_eq: &mut Matrix, _j_in: &mut Matrix) {
        j_eq[(0, 0)] = 1.0;
        j_eq[(1, 0)] = 1.0;
    }
    fn initial_point(&self) -> Vec<f64> {
        vec![self.start]
    }
}
