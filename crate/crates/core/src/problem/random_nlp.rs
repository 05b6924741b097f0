use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::dataset::standard_normal;
use super::{Problem, Sample, SamplingMode};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::{cos, dot, sin};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNlpSpec {
    pub dim: usize,
    /// Equality count: `num_eq - 1` linear rows plus one sphere (when `num_eq > 0`).
    pub num_eq: usize,
    /// Ball constraints `‖x - z_j‖² <= r_j²`.
    pub num_balls: usize,
    /// Half-spaces `a_jᵀ x <= b_j`.
    pub num_halfspaces: usize,
    pub num_samples: usize,
}

/// Random smooth, nonconvex finite-sum problem with a known feasible point.
///
/// `F_i(x) = ½ Σ d_l (x_l - a_il)² + w Σ cos(x_l)`.
#[derive(Debug, Clone)]
pub struct RandomNlp {
    diag: Vec<f64>,
    wiggle: f64,
    targets: Matrix,
    lin_eq: Matrix,
    lin_eq_rhs: Vec<f64>,
    sphere: Option<(Vec<f64>, f64)>,
    balls: Vec<(Vec<f64>, f64)>,
    halfspaces: Matrix,
    halfspace_rhs: Vec<f64>,
    x_init: Vec<f64>,
}

impl RandomNlp {
    pub fn generate<R: RngCore + ?Sized>(spec: &RandomNlpSpec, rng: &mut R) -> Result<Self> {
        let n = spec.dim;
        if n == 0 || spec.num_eq >= n || spec.num_samples == 0 {
            return Err(Error::Config("random NLP needs num_eq < dim and samples".into()));
        }
        let mut gauss = |k: usize| -> Vec<f64> { (0..k).map(|_| standard_normal(rng)).collect() };
        let x_feas = gauss(n);
        let diag: Vec<f64> = gauss(n).into_iter().map(|v| 0.5 + v.abs()).collect();
        let targets = Matrix::from_row_major(spec.num_samples, n, gauss(spec.num_samples * n));
        let n_lin = spec.num_eq.saturating_sub(1);
        let lin_eq = Matrix::from_row_major(n_lin, n, gauss(n_lin * n));
        let lin_eq_rhs = lin_eq.mul_vec(&x_feas);
        let sphere = (spec.num_eq > 0).then(|| {
            let z = gauss(n);
            let r2: f64 = x_feas.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            (z, r2)
        });
        let balls = (0..spec.num_balls)
            .map(|_| {
                let z = gauss(n);
                let r2: f64 = x_feas.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (z, r2 + 0.5)
            })
            .collect();
        let halfspaces = Matrix::from_row_major(spec.num_halfspaces, n, gauss(spec.num_halfspaces * n));
        let mut halfspace_rhs = halfspaces.mul_vec(&x_feas);
        let slack = gauss(spec.num_halfspaces);
        halfspace_rhs.iter_mut().zip(slack).for_each(|(b, s)| *b += 0.1 + s.abs());
        let x_init: Vec<f64> = x_feas.iter().zip(gauss(n)).map(|(a, b)| a + b).collect();
        let wiggle = 0.1 * rng.random::<f64>();
        Ok(Self { diag, wiggle, targets, lin_eq, lin_eq_rhs, sphere, balls, halfspaces, halfspace_rhs, x_init })
    }

    fn index(sample: &Sample) -> usize {
        match *sample {
            Sample::Index(i) => i,
            Sample::Noise(_) => panic!("random NLP is a finite-sum problem"),
        }
    }
}

impl Problem for RandomNlp {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn num_eq(&self) -> usize {
        self.lin_eq.rows() + usize::from(self.sphere.is_some())
    }

    fn num_ineq(&self) -> usize {
        self.balls.len() + self.halfspaces.rows()
    }

    fn sampling_mode(&self) -> SamplingMode {
        SamplingMode::FiniteSum { size: self.targets.rows() }
    }

    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64 {
        let a = self.targets.row(Self::index(sample));
        let mut v = 0.0;
        for l in 0..x.len() {
            let u = x[l] - a[l];
            v += 0.5 * self.diag[l] * u * u + self.wiggle * cos(x[l]);
        }
        v
    }

    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        let a = self.targets.row(Self::index(sample));
        let mut v = 0.0;
        for l in 0..x.len() {
            let u = x[l] - a[l];
            v += 0.5 * self.diag[l] * u * u + self.wiggle * cos(x[l]);
            grad[l] += weight * (self.diag[l] * u - self.wiggle * sin(x[l]));
        }
        v
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        let nl = self.lin_eq.rows();
        for i in 0..nl {
            c_eq[i] = dot(self.lin_eq.row(i), x) - self.lin_eq_rhs[i];
        }
        if let Some((z, r2)) = &self.sphere {
            c_eq[nl] = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - r2;
        }
        for (j, (z, r2)) in self.balls.iter().enumerate() {
            c_in[j] = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - r2;
        }
        let nb = self.balls.len();
        for j in 0..self.halfspaces.rows() {
            c_in[nb + j] = dot(self.halfspaces.row(j), x) - self.halfspace_rhs[j];
        }
    }

    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        let nl = self.lin_eq.rows();
        for i in 0..nl {
            j_eq.row_mut(i).copy_from_slice(self.lin_eq.row(i));
        }
        if let Some((z, _)) = &self.sphere {
            for (d, (a, b)) in j_eq.row_mut(nl).iter_mut().zip(x.iter().zip(z)) {
                *d = 2.0 * (a - b);
            }
        }
        for (j, (z, _)) in self.balls.iter().enumerate() {
            for (d, (a, b)) in j_in.row_mut(j).iter_mut().zip(x.iter().zip(z)) {
                *d = 2.0 * (a - b);
            }
        }
        let nb = self.balls.len();
        for j in 0..self.halfspaces.rows() {
            j_in.row_mut(nb + j).copy_from_slice(self.halfspaces.row(j));
        }
    }

    fn initial_point(&self) -> Vec<f64> {
        self.x_init.clone()
    }
}
