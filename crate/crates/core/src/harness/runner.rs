//! Monte-Carlo studies on simulated models and cross-validated studies on
//! user datasets.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::selectors::Method;
use crate::simulation::{sample_model, ModelSpec, RngStream};

use super::config::{ExperimentConfig, MethodConfig};
use super::cv::cross_validate;
use super::validation::{validate_hyperparams, TrainedPipeline};

/// Streams per replication: training, validation and test data, plus one spare.
pub const STREAMS_PER_REPLICATION: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Train = 0,
    Validation = 1,
    Test = 2,
}

/// Stream for one dataset of one replication. Training sets of different
/// sizes share a stream, so smaller ones are prefixes of larger ones.
pub fn replication_stream(seed: u64, replication: usize, purpose: Purpose) -> RngStream {
    RngStream::new(
        seed,
        replication as u64 * STREAMS_PER_REPLICATION + purpose as u64,
    )
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub model: String,
    pub n: usize,
    pub replication: usize,
    pub selector: Method,
    pub classifier: Classifier,
    /// Test accuracy in `[0, 1]`; `None` when the replication failed.
    pub accuracy: Option<f64>,
    /// Number of variables or components used (mean over folds in CV mode).
    pub variables: Option<f64>,
    pub dim: Option<usize>,
    pub h: Option<usize>,
    pub k: Option<usize>,
    pub error: Option<String>,
}

impl RawRow {
    fn failed(
        model: &str,
        n: usize,
        replication: usize,
        method: &MethodConfig,
        err: &Error,
    ) -> Self {
        RawRow {
            model: model.to_string(),
            n,
            replication,
            selector: method.selector,
            classifier: method.classifier,
            accuracy: None,
            variables: None,
            dim: None,
            h: None,
            k: None,
            error: Some(err.to_string()),
        }
    }
}

/// Summary of one (model, n, selector, classifier) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub n: usize,
    pub selector: Method,
    pub classifier: Classifier,
    pub replications: usize,
    pub failures: usize,
    pub mean_accuracy: Option<f64>,
    pub std_error: Option<f64>,
    pub mean_variables: Option<f64>,
    pub mode_dim: Option<usize>,
    pub mode_h: Option<usize>,
    pub mode_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<RawRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Most frequent value; ties go to the smaller value.
fn mode(values: impl Iterator<Item = usize>) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts
        .into_iter()
        .fold(None, |best: Option<(usize, usize)>, (v, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((v, c)),
        })
        .map(|(v, _)| v)
}

/// Aggregates `rows` per (model, n, selector, classifier), in order of first
/// appearance. Sums run in row order, so the same rows always give the same
/// bits.
pub fn aggregate(rows: &[RawRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize, Method, Classifier)> = Vec::new();
    let mut groups: Vec<Vec<&RawRow>> = Vec::new();
    for row in rows {
        let key = (row.model.clone(), row.n, row.selector, row.classifier);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(row),
            None => {
                keys.push(key);
                groups.push(vec![row]);
            }
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((model, n, selector, classifier), group)| {
            let ok: Vec<&RawRow> = group
                .iter()
                .copied()
                .filter(|r| r.accuracy.is_some())
                .collect();
            let m = ok.len();
            let accs: Vec<f64> = ok.iter().map(|r| r.accuracy.expect("filtered")).collect();
            let mean = (m > 0).then(|| accs.iter().sum::<f64>() / m as f64);
            let std_error = mean.map(|mu| {
                if m < 2 {
                    0.0
                } else {
                    let var =
                        accs.iter().map(|a| (a - mu) * (a - mu)).sum::<f64>() / (m - 1) as f64;
                    (var / m as f64).sqrt()
                }
            });
            let mean_variables = (m > 0)
                .then(|| ok.iter().map(|r| r.variables.unwrap_or(0.0)).sum::<f64>() / m as f64);
            AggregateRow {
                model,
                n,
                selector,
                classifier,
                replications: m,
                failures: group.len() - m,
                mean_accuracy: mean,
                std_error,
                mean_variables,
                mode_dim: mode(ok.iter().filter_map(|r| r.dim)),
                mode_h: mode(ok.iter().filter_map(|r| r.h)),
                mode_k: mode(ok.iter().filter_map(|r| r.k)),
            }
        })
        .collect()
}

fn run_method(
    method: &MethodConfig,
    config: &ExperimentConfig,
    train: &FunctionalDataset,
    validation: &FunctionalDataset,
    test: &FunctionalDataset,
) -> Result<(f64, usize, crate::harness::Choice)> {
    let chosen = validate_hyperparams(method, &config.grids, train, validation)?;
    let pipeline = TrainedPipeline::fit(method, chosen.choice, train)?;
    let accuracy = pipeline.correct(test)? as f64 / test.n_samples() as f64;
    Ok((accuracy, pipeline.n_features(), chosen.choice))
}

fn run_replication(
    config: &ExperimentConfig,
    model: &ModelSpec,
    label: &str,
    n: usize,
    replication: usize,
) -> Vec<RawRow> {
    let draw = |size: usize, purpose: Purpose| {
        sample_model(
            model,
            size,
            &mut replication_stream(config.seed, replication, purpose).rng(),
        )
    };
    let data = draw(n, Purpose::Train).and_then(|train| {
        Ok((
            train,
            draw(config.validation_size, Purpose::Validation)?,
            draw(config.test_size, Purpose::Test)?,
        ))
    });
    config
        .methods
        .iter()
        .map(|method| {
            let outcome = data
                .as_ref()
                .map_err(|e| Error::Numerical(e.to_string()))
                .and_then(|(train, val, test)| run_method(method, config, train, val, test));
            match outcome {
                Ok((accuracy, features, choice)) => RawRow {
                    model: label.to_string(),
                    n,
                    replication,
                    selector: method.selector,
                    classifier: method.classifier,
                    accuracy: Some(accuracy),
                    variables: Some(features as f64),
                    dim: choice.dim,
                    h: choice.h,
                    k: choice.k,
                    error: None,
                },
                Err(e) => RawRow::failed(label, n, replication, method, &e),
            }
        })
        .collect()
}

/// Runs every configured method. Simulation mode draws fresh training,
/// validation and test sets per replication from dedicated streams; dataset
/// mode runs nested cross-validation once per method. Failures are kept as
/// rows with an error message and excluded from the aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let label = config.source_label();
    let rows: Vec<RawRow> = if let Some(model_ref) = &config.model {
        let model = model_ref.resolve()?;
        let jobs: Vec<(usize, usize)> = config
            .train_sizes
            .iter()
            .flat_map(|&n| {
                (config.replication_offset..config.replication_offset + config.replications)
                    .map(move |r| (n, r))
            })
            .collect();
        jobs.par_iter()
            .map(|&(n, r)| run_replication(config, &model, &label, n, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        let path = config.dataset.as_ref().expect("validated dataset mode");
        let dataset = FunctionalDataset::load(path)?;
        let n = dataset.n_samples();
        config
            .methods
            .iter()
            .map(|method| {
                match cross_validate(
                    &dataset,
                    method,
                    &config.grids,
                    config.cv_scheme(),
                    config.seed,
                ) {
                    Ok(out) => RawRow {
                        model: label.clone(),
                        n,
                        replication: 0,
                        selector: method.selector,
                        classifier: method.classifier,
                        accuracy: Some(out.accuracy),
                        variables: Some(out.mean_features()),
                        dim: mode(out.folds.iter().filter_map(|f| f.choice.dim)),
                        h: mode(out.folds.iter().filter_map(|f| f.choice.h)),
                        k: mode(out.folds.iter().filter_map(|f| f.choice.k)),
                        error: None,
                    },
                    Err(e) => RawRow::failed(&label, n, 0, method, &e),
                }
            })
            .collect()
    };
    let aggregates = aggregate(&rows);
    Ok(ExperimentReport {
        config: config.clone(),
        rows,
        aggregates,
    })
}
