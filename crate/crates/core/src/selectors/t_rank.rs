use crate::data::{FunctionalDataset, SelectionResult};
use crate::dcov::{DependenceCurve, Measure};
use crate::error::{Error, Result};

use super::{hyperparams, Method};

pub(crate) struct ClassMoments {
    pub n: f64,
    pub mean: f64,
    /// Unbiased variance (denominator `n - 1`).
    pub var: f64,
}

pub(crate) fn class_moments(values: &[f64], members: &[usize]) -> ClassMoments {
    let n = members.len() as f64;
    let mean = members.iter().map(|&i| values[i]).sum::<f64>() / n;
    let ss: f64 = members.iter().map(|&i| (values[i] - mean).powi(2)).sum();
    ClassMoments {
        n,
        mean,
        var: ss / (n - 1.0),
    }
}

/// Welch two-sample statistic `|x̄₁ - x̄₀| / sqrt(s₁²/n₁ + s₀²/n₀)` at every
/// grid point. A zero standard error yields 0 for equal means and
/// `f64::MAX` otherwise.
pub fn t_scores(dataset: &FunctionalDataset) -> Result<DependenceCurve> {
    let split = dataset.split_by_class();
    for label in [0u8, 1] {
        let count = split.class(label).len();
        if count < 2 {
            return Err(Error::DegenerateClass {
                class: label,
                count,
                required: 2,
            });
        }
    }
    let values = (0..dataset.n_points())
        .map(|j| {
            let col = dataset.column(j);
            let c0 = class_moments(col, &split.class0);
            let c1 = class_moments(col, &split.class1);
            let diff = (c1.mean - c0.mean).abs();
            let se = (c1.var / c1.n + c0.var / c0.n).sqrt();
            if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::MAX
            }
        })
        .collect();
    DependenceCurve::new(dataset.grid().clone(), values, Measure::T, None)
}

/// Indices of the `d` largest values, descending, ties to the smaller index.
pub fn top_k(values: &[f64], d: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(d);
    order
}

pub fn t_select(dataset: &FunctionalDataset, d: usize) -> Result<SelectionResult> {
    if d > dataset.n_points() {
        return Err(Error::param(format!(
            "cannot select {} of {} variables",
            d,
            dataset.n_points()
        )));
    }
    let curve = t_scores(dataset)?;
    let indices = top_k(&curve.values, d);
    let scores = indices.iter().map(|&i| curve.values[i]).collect();
    Ok(SelectionResult {
        indices,
        scores,
        method: Method::T,
        hyperparams: hyperparams(&[("d", d as f64)]),
    })
}
