//! Hyperparameter search over the configured grids and the trained
//! selector-plus-classifier pipeline.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, KnnModel, LdaModel, DEFAULT_LDA_REGULARIZATION};
use crate::data::{FunctionalDataset, Label};
use crate::dcov::{dependence_curve, Measure};
use crate::error::{Error, Result};
use crate::maxima::{select_maxima, MaximaConfig};
use crate::selectors::{self, Method, Projection, SelectorSpec};

use super::config::{HyperGrids, MethodConfig};

/// One point of the search grid. `dim` is the requested number of variables
/// (or PLS components); fewer are used when the selector yields fewer.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Choice {
    pub dim: Option<usize>,
    pub h: Option<usize>,
    pub k: Option<usize>,
}

impl Choice {
    /// Preference order among equally accurate choices: fewer variables,
    /// then smaller k, then smaller h.
    fn parsimony(&self) -> (usize, usize, usize) {
        (
            self.dim.unwrap_or(usize::MAX),
            self.k.unwrap_or(0),
            self.h.unwrap_or(0),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validated {
    pub choice: Choice,
    /// Accuracy of the winning choice on the evaluation data.
    pub accuracy: f64,
}

/// Best candidate: most correct predictions, then the parsimony order.
pub(crate) fn best_choice(scored: &[(Choice, usize)]) -> Option<(Choice, usize)> {
    scored.iter().copied().min_by(|a, b| match b.1.cmp(&a.1) {
        Ordering::Equal => a.0.parsimony().cmp(&b.0.parsimony()),
        other => other,
    })
}

struct Family {
    h: Option<usize>,
    projection: Projection,
}

fn capped_max(grid: &[usize], cap: usize) -> usize {
    grid.iter().copied().max().unwrap_or(1).min(cap).max(1)
}

/// Largest PLS component count the training set supports.
fn pls_cap(train: &FunctionalDataset) -> usize {
    train
        .n_points()
        .min(train.n_samples().saturating_sub(1))
        .max(1)
}

fn mh_windows(method: &MethodConfig, grids: &HyperGrids, n_points: usize) -> Result<Vec<usize>> {
    let hs: Vec<usize> = match method.params.h {
        Some(h) => vec![h],
        None => grids.h.clone(),
    };
    let hs: Vec<usize> = hs.into_iter().filter(|&h| h < n_points).collect();
    if hs.is_empty() {
        return Err(Error::param(format!(
            "no window half-width below the {} grid points",
            n_points
        )));
    }
    Ok(hs)
}

/// Fits each selector variant once at the largest dimension of the grid.
fn fit_families(
    method: &MethodConfig,
    grids: &HyperGrids,
    train: &FunctionalDataset,
) -> Result<Vec<Family>> {
    let n_points = train.n_points();
    let grid = train.grid().clone();
    let selector = method.selector;
    match selector {
        Method::MHV | Method::MHR => {
            let (measure, estimator) = if selector == Method::MHV {
                (Measure::V2, method.params.estimator_or_default())
            } else {
                (Measure::R2, crate::dcov::Estimator::DC)
            };
            let curve = dependence_curve(train, measure, estimator)?;
            let d_max = capped_max(&grids.dims, n_points);
            mh_windows(method, grids, n_points)?
                .into_iter()
                .map(|h| {
                    let sel = select_maxima(&curve, MaximaConfig::new(h, d_max)?, selector)?;
                    Ok(Family {
                        h: Some(h),
                        projection: Projection::index_subset(grid.clone(), sel.indices),
                    })
                })
                .collect()
        }
        Method::BASE => Ok(vec![Family {
            h: None,
            projection: Projection::identity(grid),
        }]),
        _ => {
            let d_max = if selector == Method::PLS {
                capped_max(&grids.pls_components, pls_cap(train))
            } else {
                capped_max(&grids.dims, n_points)
            };
            let spec = SelectorSpec {
                method: selector,
                target_dim: d_max,
                params: method.params,
            };
            Ok(vec![Family {
                h: None,
                projection: selectors::fit(&spec, train)?.projection,
            }])
        }
    }
}

fn dim_grid(method: &MethodConfig, grids: &HyperGrids) -> Vec<Option<usize>> {
    match method.selector {
        Method::BASE => vec![None],
        Method::PLS => grids.pls_components.iter().map(|&c| Some(c)).collect(),
        _ => grids.dims.iter().map(|&d| Some(d)).collect(),
    }
}

/// Number of correct predictions on `eval` for every candidate that could be
/// trained. Candidates whose classifier fails to fit are left out.
pub(crate) fn score_candidates(
    method: &MethodConfig,
    grids: &HyperGrids,
    train: &FunctionalDataset,
    eval: &FunctionalDataset,
) -> Result<Vec<(Choice, usize)>> {
    let families = fit_families(method, grids, train)?;
    let ks: Vec<usize> = match method.classifier {
        Classifier::KNN => {
            let ks: Vec<usize> = grids
                .k
                .iter()
                .copied()
                .filter(|&k| k <= train.n_samples())
                .collect();
            if ks.is_empty() {
                return Err(Error::param(format!(
                    "every k in the grid exceeds the {} training samples",
                    train.n_samples()
                )));
            }
            ks
        }
        Classifier::LDA => Vec::new(),
    };
    let dims = dim_grid(method, grids);
    let mut out = Vec::new();
    for family in &families {
        let available = family.projection.dim();
        // results per effective dimension, shared by requested dims above it
        let mut by_effective: BTreeMap<usize, Option<Scores>> = BTreeMap::new();
        for &d in &dims {
            let eff = d.map_or(available, |d| d.min(available));
            let scores = by_effective.entry(eff).or_insert_with(|| {
                evaluate_projection(&family.projection.truncated(eff), method, &ks, train, eval)
                    .ok()
            });
            if let Some(scores) = scores {
                for &(k, correct) in scores.iter() {
                    out.push((
                        Choice {
                            dim: d,
                            h: family.h,
                            k,
                        },
                        correct,
                    ));
                }
            }
        }
    }
    Ok(out)
}

fn count_correct(pred: &[Label], truth: &[Label]) -> usize {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count()
}

/// Correct predictions per neighbor count (`None` for LDA).
type Scores = Vec<(Option<usize>, usize)>;

fn evaluate_projection(
    projection: &Projection,
    method: &MethodConfig,
    ks: &[usize],
    train: &FunctionalDataset,
    eval: &FunctionalDataset,
) -> Result<Scores> {
    let x_train = projection.project(train)?;
    let x_eval = projection.project(eval)?;
    match method.classifier {
        Classifier::KNN => {
            let model = KnnModel::fit(&x_train, train.labels(), ks[0])?;
            let preds = model.predict_for_ks(&x_eval, ks)?;
            Ok(ks
                .iter()
                .zip(preds)
                .map(|(&k, p)| (Some(k), count_correct(&p, eval.labels())))
                .collect())
        }
        Classifier::LDA => {
            let model = LdaModel::fit(&x_train, train.labels(), DEFAULT_LDA_REGULARIZATION)?;
            let p = model.predict(&x_eval)?;
            Ok(vec![(None, count_correct(&p, eval.labels()))])
        }
    }
}

/// Exhaustive search maximizing accuracy on `validation`; ties go to fewer
/// variables, then smaller k, then smaller h.
pub fn validate_hyperparams(
    method: &MethodConfig,
    grids: &HyperGrids,
    train: &FunctionalDataset,
    validation: &FunctionalDataset,
) -> Result<Validated> {
    method.validate()?;
    grids.validate()?;
    let scored = score_candidates(method, grids, train, validation)?;
    let (choice, correct) = best_choice(&scored).ok_or_else(|| {
        Error::Numerical(format!(
            "no candidate of {} could be trained",
            method.label()
        ))
    })?;
    Ok(Validated {
        choice,
        accuracy: correct as f64 / validation.n_samples() as f64,
    })
}

#[derive(Debug, Clone)]
enum TrainedClassifier {
    Knn(KnnModel),
    Lda(LdaModel),
}

/// A selector and classifier fitted on one training set.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub projection: Projection,
    pub choice: Choice,
    classifier: TrainedClassifier,
}

impl TrainedPipeline {
    pub fn fit(method: &MethodConfig, choice: Choice, train: &FunctionalDataset) -> Result<Self> {
        method.validate()?;
        let projection = if method.selector == Method::BASE {
            Projection::identity(train.grid().clone())
        } else {
            let cap = if method.selector == Method::PLS {
                pls_cap(train)
            } else {
                train.n_points()
            };
            let requested = choice
                .dim
                .ok_or_else(|| Error::param(format!("{} needs a dimension", method.selector)))?;
            let mut params = method.params;
            if method.selector.is_maxima_hunting() {
                params.h = choice.h.or(params.h);
            }
            let spec = SelectorSpec {
                method: method.selector,
                target_dim: requested.min(cap),
                params,
            };
            selectors::fit(&spec, train)?.projection
        };
        let features = projection.project(train)?;
        let classifier = match method.classifier {
            Classifier::KNN => {
                let k = choice
                    .k
                    .ok_or_else(|| Error::param("k-NN needs a neighbor count"))?;
                TrainedClassifier::Knn(KnnModel::fit(&features, train.labels(), k)?)
            }
            Classifier::LDA => TrainedClassifier::Lda(LdaModel::fit(
                &features,
                train.labels(),
                DEFAULT_LDA_REGULARIZATION,
            )?),
        };
        Ok(TrainedPipeline {
            projection,
            choice,
            classifier,
        })
    }

    pub fn n_features(&self) -> usize {
        self.projection.dim()
    }

    pub fn predict(&self, data: &FunctionalDataset) -> Result<Vec<Label>> {
        let x = self.projection.project(data)?;
        match &self.classifier {
            TrainedClassifier::Knn(m) => m.predict(&x),
            TrainedClassifier::Lda(m) => m.predict(&x),
        }
    }

    pub(crate) fn correct(&self, data: &FunctionalDataset) -> Result<usize> {
        Ok(count_correct(&self.predict(data)?, data.labels()))
    }
}
