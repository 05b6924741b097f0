use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::SymmetricOperator;
use crate::math::{axpy, dot, norm2, sqrt};

/// Pairs with `sᵀy <= CURVATURE_THRESHOLD ‖s‖‖y‖` are skipped.
pub const CURVATURE_THRESHOLD: f64 = 1e-8;

/// Limited-memory BFGS approximation `B` of a Hessian.
///
/// `B = γI + Σᵢ (bᵢbᵢᵀ - aᵢaᵢᵀ)` with `aᵢ = Bᵢ₋₁sᵢ / √(sᵢᵀBᵢ₋₁sᵢ)` and
/// `bᵢ = yᵢ / √(yᵢᵀsᵢ)`, the unrolled form of the compact representation.
/// The factors are rebuilt after every accepted update.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsModel {
    dim: usize,
    capacity: usize,
    gamma: f64,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl LbfgsModel {
    pub fn new(dim: usize, capacity: usize) -> Self {
        Self { dim, capacity, gamma: 1.0, pairs: VecDeque::new(), a: Vec::new(), b: Vec::new() }
    }

    /// Memory `min(n, 10)`.
    pub fn with_default_memory(dim: usize) -> Self {
        Self::new(dim, dim.min(10))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    /// Adds `(s, y)` if it passes the curvature test. Returns whether it was
    /// accepted.
    pub fn update(&mut self, s: &[f64], y: &[f64]) -> bool {
        debug_assert_eq!(s.len(), self.dim);
        let sy = dot(s, y);
        let (ns, ny) = (norm2(s), norm2(y));
        if self.capacity == 0 || ns == 0.0 || !(sy > CURVATURE_THRESHOLD * ns * ny) || !sy.is_finite() {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s.to_vec(), y.to_vec()));
        self.gamma = dot(y, y) / sy;
        self.rebuild();
        true
    }

    fn rebuild(&mut self) {
        self.a.clear();
        self.b.clear();
        let mut bs = vec![0.0; self.dim];
        for k in 0..self.pairs.len() {
            let (s, y) = &self.pairs[k];
            self.apply_prefix(k, s, &mut bs);
            let sbs = dot(s, &bs);
            let sy = dot(s, y);
            let ra = 1.0 / sqrt(sbs);
            let rb = 1.0 / sqrt(sy);
            self.a.push(bs.iter().map(|v| v * ra).collect());
            self.b.push(y.iter().map(|v| v * rb).collect());
        }
    }

    /// Product with the matrix built from the first `k` pairs.
    fn apply_prefix(&self, k: usize, v: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(v).for_each(|(o, vi)| *o = self.gamma * vi);
        for i in 0..k {
            axpy(dot(&self.b[i], v), &self.b[i], out);
            axpy(-dot(&self.a[i], v), &self.a[i], out);
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply(v, &mut out);
        out
    }
}

impl SymmetricOperator for LbfgsModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.apply_prefix(self.a.len(), v, out)
    }
}
