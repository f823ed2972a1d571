//! k-nearest neighbors (Euclidean) and Fisher linear discriminant analysis on
//! projected features.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Default LDA ridge, relative to `trace(S) / c`.
pub const DEFAULT_LDA_REGULARIZATION: f64 = 1e-8;

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classifier {
    KNN,
    LDA,
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "KNN" => Ok(Classifier::KNN),
            "LDA" => Ok(Classifier::LDA),
            _ => Err(Error::param(format!("unknown classifier {:?}", s))),
        }
    }
}

fn check_labels(features: &DMatrix<f64>, labels: &[Label]) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: features.nrows(),
        });
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::param("labels must be 0 or 1"));
    }
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    rows: Vec<f64>,
    dim: usize,
    labels: Vec<Label>,
    k: usize,
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::param(format!("k={} must be odd and positive", k)));
    }
    if k > m {
        return Err(Error::param(format!(
            "k={} exceeds the {} training samples",
            k, m
        )));
    }
    Ok(())
}

impl KnnModel {
    /// Stores the training set. `k` must be odd and at most the number of rows.
    pub fn fit(features: &DMatrix<f64>, labels: &[Label], k: usize) -> Result<Self> {
        check_labels(features, labels)?;
        check_k(k, labels.len())?;
        Ok(KnnModel {
            rows: row_major(features),
            dim: features.ncols(),
            labels: labels.to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, queries: &DMatrix<f64>) -> Result<Vec<Label>> {
        Ok(self.predict_for_ks(queries, &[self.k])?.remove(0))
    }

    /// Predictions for several neighbor counts from a single neighbor sort.
    /// Each `k` must satisfy the same rules as at fit time.
    pub fn predict_for_ks(&self, queries: &DMatrix<f64>, ks: &[usize]) -> Result<Vec<Vec<Label>>> {
        if queries.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: queries.ncols(),
            });
        }
        let m = self.labels.len();
        for &k in ks {
            check_k(k, m)?;
        }
        let k_max = ks.iter().copied().max().unwrap_or(0);
        let mut out = vec![Vec::with_capacity(queries.nrows()); ks.len()];
        if k_max == 0 {
            return Ok(out);
        }
        let q_rows = row_major(queries);
        let mut neighbors: Vec<(f64, usize)> = Vec::with_capacity(m);
        let by_distance =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        for q in q_rows.chunks_exact(self.dim.max(1)).take(queries.nrows()) {
            neighbors.clear();
            for i in 0..m {
                let r = &self.rows[i * self.dim..(i + 1) * self.dim];
                let d2: f64 = if self.dim == 0 {
                    0.0
                } else {
                    r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
                };
                neighbors.push((d2, i));
            }
            if k_max < m {
                neighbors.select_nth_unstable_by(k_max - 1, by_distance);
                neighbors.truncate(k_max);
            }
            neighbors.sort_unstable_by(by_distance);
            for (slot, &k) in ks.iter().enumerate() {
                let ones = neighbors[..k]
                    .iter()
                    .filter(|&&(_, i)| self.labels[i] == 1)
                    .count();
                out[slot].push(u8::from(2 * ones > k));
            }
        }
        // zero-dimensional features: every query sees the same neighbor order
        if self.dim == 0 {
            for (slot, &k) in ks.iter().enumerate() {
                let ones = self.labels[..k].iter().filter(|&&y| y == 1).count();
                out[slot] = vec![u8::from(2 * ones > k); queries.nrows()];
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct LdaModel {
    pub mean0: DVector<f64>,
    pub mean1: DVector<f64>,
    /// Regularized pooled within-class covariance.
    pub covariance: DMatrix<f64>,
    /// `S⁻¹ (μ₁ - μ₀)`.
    pub direction: DVector<f64>,
    /// `log(n₁ / n₀)`.
    pub log_prior_odds: f64,
}

impl LdaModel {
    pub fn fit(features: &DMatrix<f64>, labels: &[Label], regularization: f64) -> Result<Self> {
        check_labels(features, labels)?;
        let c = features.ncols();
        if c == 0 {
            return Err(Error::param("LDA needs at least one feature"));
        }
        if regularization.is_nan() || regularization < 0.0 {
            return Err(Error::param("regularization must be non-negative"));
        }
        let idx0: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
        let idx1: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
        for (label, idx) in [(0u8, &idx0), (1u8, &idx1)] {
            if idx.len() < 2 {
                return Err(Error::DegenerateClass {
                    class: label,
                    count: idx.len(),
                    required: 2,
                });
            }
        }
        let class_mean = |idx: &[usize]| {
            DVector::from_fn(c, |j, _| {
                idx.iter().map(|&i| features[(i, j)]).sum::<f64>() / idx.len() as f64
            })
        };
        let mean0 = class_mean(&idx0);
        let mean1 = class_mean(&idx1);

        let mut scatter = DMatrix::zeros(c, c);
        for (idx, mean) in [(&idx0, &mean0), (&idx1, &mean1)] {
            for &i in idx.iter() {
                let d = features.row(i).transpose() - mean;
                scatter += &d * d.transpose();
            }
        }
        let dof = (idx0.len() + idx1.len() - 2) as f64;
        let mut covariance = scatter / dof;
        let ridge = regularization * covariance.trace() / c as f64;
        for j in 0..c {
            covariance[(j, j)] += ridge;
        }

        let chol = covariance.clone().cholesky().ok_or(Error::IllConditioned)?;
        let direction = chol.solve(&(&mean1 - &mean0));
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned);
        }
        Ok(LdaModel {
            mean0,
            mean1,
            covariance,
            direction,
            log_prior_odds: (idx1.len() as f64 / idx0.len() as f64).ln(),
        })
    }

    /// Discriminant value; positive means class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut s = self.log_prior_odds;
        for (j, (&xj, &w)) in x.iter().zip(self.direction.iter()).enumerate() {
            let mid = 0.5 * (self.mean0[j] + self.mean1[j]);
            s += (xj - mid) * w;
        }
        s
    }

    pub fn predict(&self, queries: &DMatrix<f64>) -> Result<Vec<Label>> {
        let c = self.direction.len();
        if queries.ncols() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: queries.ncols(),
            });
        }
        let rows = row_major(queries);
        Ok(rows
            .chunks_exact(c)
            .map(|x| u8::from(self.score(x) > 0.0))
            .collect())
    }
}

/// Fraction of positions where the two label sequences agree.
pub fn accuracy(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::param("accuracy of an empty sequence"));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
