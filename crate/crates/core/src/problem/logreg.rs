use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{Dataset, Problem, Sample, SamplingMode};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::math::{log1p_exp_neg, sigmoid, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `‖xⁱ‖² = 1` for every class block.
    Equality,
    /// `‖xⁱ‖² <= 1` for every class block.
    Inequality,
}

/// Multiclass logistic regression with one sigmoid classifier per class and
/// a norm constraint on each classifier.
///
/// The per-sample loss is `-log σ(yᵀ x^label)`, the negative cross-entropy
/// of the class-wise sigmoid for the true class.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    data: Arc<Dataset>,
    kind: ConstraintKind,
}

pub fn build_logreg_problem(data: Arc<Dataset>, kind: ConstraintKind) -> Result<LogisticRegression> {
    if data.is_empty() {
        return Err(Error::Config("logistic regression needs a nonempty dataset".into()));
    }
    Ok(LogisticRegression { data, kind })
}

impl LogisticRegression {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    #[inline]
    fn block<'a>(&self, x: &'a [f64], class: usize) -> &'a [f64] {
        let nf = self.data.n_features();
        &x[class * nf..(class + 1) * nf]
    }

    fn sample_index(sample: &Sample) -> usize {
        match *sample {
            Sample::Index(i) => i,
            Sample::Noise(_) => panic!("logistic regression is a finite-sum problem"),
        }
    }
}

impl Problem for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.n_features() * self.data.n_classes()
    }

    fn num_eq(&self) -> usize {
        match self.kind {
            ConstraintKind::Equality => self.data.n_classes(),
            ConstraintKind::Inequality => 0,
        }
    }

    fn num_ineq(&self) -> usize {
        match self.kind {
            ConstraintKind::Equality => 0,
            ConstraintKind::Inequality => self.data.n_classes(),
        }
    }

    fn sampling_mode(&self) -> SamplingMode {
        SamplingMode::FiniteSum { size: self.data.len() }
    }

    fn sample_value(&self, x: &[f64], sample: &Sample) -> f64 {
        let i = Self::sample_index(sample);
        let t = self.data.row_dot(i, self.block(x, self.data.label(i)));
        log1p_exp_neg(t)
    }

    fn sample_value_grad_acc(&self, x: &[f64], sample: &Sample, weight: f64, grad: &mut [f64]) -> f64 {
        let i = Self::sample_index(sample);
        let label = self.data.label(i);
        let nf = self.data.n_features();
        let t = self.data.row_dot(i, self.block(x, label));
        let coeff = -(1.0 - sigmoid(t)) * weight;
        self.data.row_axpy(i, coeff, &mut grad[label * nf..(label + 1) * nf]);
        log1p_exp_neg(t)
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        let out = match self.kind {
            ConstraintKind::Equality => c_eq,
            ConstraintKind::Inequality => c_in,
        };
        for (k, c) in out.iter_mut().enumerate() {
            let b = self.block(x, k);
            *c = b.iter().map(|v| v * v).sum::<f64>() - 1.0;
        }
    }

    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        let nf = self.data.n_features();
        let jac = match self.kind {
            ConstraintKind::Equality => j_eq,
            ConstraintKind::Inequality => j_in,
        };
        for k in 0..self.data.n_classes() {
            let row = jac.row_mut(k);
            row.iter_mut().for_each(|v| *v = 0.0);
            for (dst, src) in row[k * nf..(k + 1) * nf].iter_mut().zip(self.block(x, k)) {
                *dst = 2.0 * src;
            }
        }
    }

    /// Every classifier starts at `0.5/√n_f · 1`, i.e. norm one half.
    fn initial_point(&self) -> Vec<f64> {
        let nf = self.data.n_features();
        vec![0.5 / sqrt(nf as f64); self.dim()]
    }
}
