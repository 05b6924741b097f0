use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::math::{cos, ln, sqrt};

/// Sparse labelled classification data with an implicit constant bias
/// feature at index `n_features - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<(u32, f64)>>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
}

impl Dataset {
    /// `rows` hold the explicit features only (indices `< n_raw_features`,
    /// strictly increasing). The bias is appended implicitly, so the
    /// resulting dataset has `n_raw_features + 1` features.
    pub fn new(rows: Vec<Vec<(u32, f64)>>, labels: Vec<usize>, n_raw_features: usize, n_classes: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Config(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for &(j, v) in row {
                if j as usize >= n_raw_features {
                    return Err(Error::Config(format!("row {r}: feature index {j} out of range")));
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::Config(format!("row {r}: feature indices not increasing")));
                }
                if !v.is_finite() {
                    return Err(Error::Config(format!("row {r}: non-finite feature value")));
                }
                prev = Some(j);
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Config(format!("label {bad} out of range for {n_classes} classes")));
        }
        Ok(Self { rows, labels, n_features: n_raw_features + 1, n_classes })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature count including the bias.
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Explicit (non-bias) entries of row `i`.
    pub fn raw_row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// All entries of row `i`, bias last.
    pub fn features(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[i]
            .iter()
            .map(|&(j, v)| (j as usize, v))
            .chain(core::iter::once((self.n_features - 1, 1.0)))
    }

    /// `yᵢᵀ w` for a weight block `w` of length `n_features`.
    #[inline]
    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let mut s = w[self.n_features - 1];
        for &(j, v) in &self.rows[i] {
            s += v * w[j as usize];
        }
        s
    }

    /// Divides every explicit feature by its largest magnitude over the
    /// dataset, mapping values into `[-1, 1]` and keeping sparsity.
    pub fn max_abs_scaled(&self) -> Dataset {
        let mut scale = vec![0.0f64; self.n_features - 1];
        for row in &self.rows {
            for &(j, v) in row {
                scale[j as usize] = scale[j as usize].max(v.abs());
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| (j, if scale[j as usize] > 0.0 { v / scale[j as usize] } else { v })).collect())
            .collect();
        Dataset { rows, labels: self.labels.clone(), n_features: self.n_features, n_classes: self.n_classes }
    }

    /// `w += alpha * yᵢ`
    #[inline]
    pub fn row_axpy(&self, i: usize, alpha: f64, w: &mut [f64]) {
        w[self.n_features - 1] += alpha;
        for &(j, v) in &self.rows[i] {
            w[j as usize] += alpha * v;
        }
    }
}

/// Parameters of a Gaussian-cluster classification dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticClassSpec {
    /// Explicit features (the bias is added on top).
    pub n_raw_features: usize,
    pub n_classes: usize,
    pub n_samples: usize,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    /// Per-coordinate standard deviation around the class mean.
    pub spread: f64,
}

pub(crate) fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1] avoids log(0).
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    sqrt(-2.0 * ln(u1)) * cos(2.0 * core::f64::consts::PI * u2)
}

/// Dense Gaussian clusters around random class means on a sphere.
pub fn synthetic_classification<R: RngCore + ?Sized>(spec: &SyntheticClassSpec, rng: &mut R) -> Result<Dataset> {
    if spec.n_classes == 0 || spec.n_raw_features == 0 || spec.n_samples == 0 {
        return Err(Error::Config("synthetic dataset needs features, classes and samples".into()));
    }
    let d = spec.n_raw_features;
    let centers: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
            let norm = sqrt(v.iter().map(|a| a * a).sum::<f64>()).max(1e-12);
            v.into_iter().map(|a| a * spec.separation / norm).collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let label = rng.random_range(0..spec.n_classes);
        let row = centers[label]
            .iter()
            .enumerate()
            .map(|(j, c)| (j as u32, c + spec.spread * standard_normal(rng)))
            .collect();
        rows.push(row);
        labels.push(label);
    }
    Dataset::new(rows, labels, d, spec.n_classes)
}
