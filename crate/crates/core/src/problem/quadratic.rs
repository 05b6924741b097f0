use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::dataset::standard_normal;
use super::{Problem, Sample, SamplingMode};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::{dot, norm2, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyQuadraticSpec {
    pub dim: usize,
    pub num_constraints: usize,
    pub num_samples: usize,
    /// Per-sample gradient noise norm relative to `‖∇f(x_init)‖`.
    pub relative_noise: f64,
}

impl Default for NoisyQuadraticSpec {
    fn default() -> Self {
        Self { dim: 10, num_constraints: 3, num_samples: 2000, relative_noise: 0.01 }
    }
}

/// Finite-sum, strongly convex quadratic with linear equality constraints,
/// generated around a known KKT pair `(x*, λ*)`.
///
/// With `u = x - x*`, sample `i` contributes
/// `F_i(x) = ½ uᵀQu + g*ᵀu + ξᵢᵀu`, where `g* = -Aᵀλ*` and the noise
/// vectors `ξᵢ` are centered over the dataset. Constraints are `A u = 0`.
/// Everything is expressed in `u` so values stay accurate close to `x*`.
#[derive(Debug, Clone)]
pub struct NoisyQuadratic {
    q: Matrix,
    a: Matrix,
    x_star: Vec<f64>,
    lambda_star: Vec<f64>,
    g_star: Vec<f64>,
    noise: Matrix,
    x_init: Vec<f64>,
}

impl NoisyQuadratic {
    pub fn generate<R: RngCore + ?Sized>(spec: &NoisyQuadraticSpec, rng: &mut R) -> Result<Self> {
        let (n, m, ns) = (spec.dim, spec.num_constraints, spec.num_samples);
        if n == 0 || m >= n || ns == 0 {
            return Err(Error::Config("noisy quadratic needs 0 <= m < n and samples".into()));
        }
        let mut gauss = |k: usize| -> Vec<f64> { (0..k).map(|_| standard_normal(rng)).collect() };
        let scale = 1.0 / sqrt(n as f64);
        let m_raw = Matrix::from_row_major(n, n, gauss(n * n).into_iter().map(|v| v * scale).collect());
        // Q = ½ MᵀM + ½ I
        let mut q = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += m_raw[(k, i)] * m_raw[(k, j)];
                }
                q[(i, j)] = 0.5 * s + if i == j { 0.5 } else { 0.0 };
            }
        }
        let a = Matrix::from_row_major(m, n, gauss(m * n));
        let x_star = gauss(n);
        let lambda_star = gauss(m);
        let g_star: Vec<f64> = a.tr_mul_vec(&lambda_star).into_iter().map(|v| -v).collect();
        let x_init: Vec<f64> = x_star.iter().zip(gauss(n)).map(|(a, b)| a + b).collect();

        let u0: Vec<f64> = x_init.iter().zip(&x_star).map(|(a, b)| a - b).collect();
        let mut grad0 = q.mul_vec(&u0);
        grad0.iter_mut().zip(&g_star).for_each(|(g, s)| *g += s);
        let sd = spec.relative_noise * norm2(&grad0) * scale;

        let mut noise = Matrix::from_row_major(ns, n, gauss(ns * n).into_iter().map(|v| v * sd).collect());
        let mut mean = vec![0.0; n];
        for i in 0..ns {
            mean.iter_mut().zip(noise.row(i)).for_each(|(m, v)| *m += v / ns as f64);
        }
        for i in 0..ns {
            noise.row_mut(i).iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
        }
        Ok(Self { q, a, x_star, lambda_star, g_star, noise, x_init })
    }

    pub fn solution(&self) -> (&[f64], &[f64]) {
        (&self.x_star, &self.lambda_star)
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect()
    }

    fn index(sample: &Sample) -> usize {
        match *sample {
            Sample::Index(i) => i,
            Sample::Noise(_) => panic!("noisy quadratic is a finite-sum problem"),
        }
    }
}

impl Problem for NoisyQuadratic {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn num_eq(&self) -> usize {
        self.a.rows()
    }

    fn num_ineq(&self) -> usize {
        0
    }

    fn sampling_mode(&self) -> SamplingMode {
        SamplingMode::FiniteSum { size: self.noise.rows() }
    }

    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64 {
        let u = self.offset(x);
        let qu = self.q.mul_vec(&u);
        0.5 * dot(&u, &qu) + dot(&self.g_star, &u) + dot(self.noise.row(Self::index(sample)), &u)
    }

    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        let u = self.offset(x);
        let qu = self.q.mul_vec(&u);
        let xi = self.noise.row(Self::index(sample));
        for (((g, a), b), c) in grad.iter_mut().zip(&qu).zip(&self.g_star).zip(xi) {
            *g += weight * (a + b + c);
        }
        0.5 * dot(&u, &qu) + dot(&self.g_star, &u) + dot(xi, &u)
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], _c_in: &mut [f64]) {
        let u = self.offset(x);
        self.a.mul_vec_into(&u, c_eq);
    }

    fn jacobians(&self, _x: &[f64], j_eq: &mut Matrix, _j_in: &mut Matrix) {
        *j_eq = self.a.clone();
    }

    fn initial_point(&self) -> Vec<f64> {
        self.x_init.clone()
    }

    fn true_value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let u = self.offset(x);
        let mut g = self.q.mul_vec(&u);
        let v = 0.5 * dot(&u, &g) + dot(&self.g_star, &u);
        g.iter_mut().zip(&self.g_star).for_each(|(a, b)| *a += b);
        Some((v, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solution_is_a_kkt_point() {
        let p = NoisyQuadratic::generate(&NoisyQuadraticSpec::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (x, l) = p.solution();
        let (_, g) = p.true_value_grad(x).unwrap();
        let jt_l = p.a.tr_mul_vec(l);
        for (a, b) in g.iter().zip(&jt_l) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_mean_matches_noiseless_gradient() {
        let p = NoisyQuadratic::generate(&NoisyQuadraticSpec::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let x = p.initial_point();
        let mut g = vec![0.0; p.dim()];
        let n = p.noise.rows();
        for i in 0..n {
            p.sample_value_grad_acc(&x, &Sample::Index(i), 1.0 / n as f64, &mut g);
        }
        let (_, gt) = p.true_value_grad(&x).unwrap();
        for (a, b) in g.iter().zip(&gt) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
