//! Nested, class-stratified cross-validation for user datasets.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FunctionalDataset, Label};
use crate::error::{Error, Result};
use crate::simulation::RngStream;

use super::config::{CvScheme, HyperGrids, MethodConfig};
use super::validation::{best_choice, score_candidates, Choice, TrainedPipeline};

/// Test folds for `labels`. Leave-one-out yields one fold per sample in index
/// order. k-fold shuffles each class with `rng` and deals it round-robin, so
/// class proportions are preserved up to rounding. Each fold is sorted.
pub fn stratified_folds(
    labels: &[Label],
    scheme: CvScheme,
    rng: &mut impl rand::Rng,
) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    let class0: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
    let class1: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    for (c, members) in [(0, &class0), (1, &class1)] {
        if members.is_empty() {
            return Err(Error::Stratification(format!("class {} is absent", c)));
        }
    }
    let folds: Vec<Vec<usize>> = match scheme {
        CvScheme::LeaveOneOut => (0..n).map(|i| vec![i]).collect(),
        CvScheme::KFold { k } => {
            if k < 2 || k > n {
                return Err(Error::Stratification(format!(
                    "{}-fold needs 2 <= k <= n = {}",
                    k, n
                )));
            }
            let mut order = class0.clone();
            order.shuffle(rng);
            let mut ones = class1.clone();
            ones.shuffle(rng);
            order.extend(ones);
            let mut folds = vec![Vec::new(); k];
            for (pos, i) in order.into_iter().enumerate() {
                folds[pos % k].push(i);
            }
            folds.iter_mut().for_each(|f| f.sort_unstable());
            folds
        }
    };
    for (f, fold) in folds.iter().enumerate() {
        let ones = fold.iter().filter(|&&i| labels[i] == 1).count();
        let zeros = fold.len() - ones;
        if zeros == class0.len() || ones == class1.len() {
            let c = if zeros == class0.len() { 0 } else { 1 };
            return Err(Error::Stratification(format!(
                "training part of fold {} has no class-{} samples",
                f, c
            )));
        }
    }
    Ok(folds)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - fold.len());
    let mut it = fold.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub choice: Choice,
    pub n_features: usize,
    pub correct: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub accuracy: f64,
    pub folds: Vec<FoldOutcome>,
}

impl CvOutcome {
    pub fn mean_features(&self) -> f64 {
        self.folds.iter().map(|f| f.n_features as f64).sum::<f64>() / self.folds.len() as f64
    }
}

/// Hyperparameters chosen by an inner cross-validation (same scheme) on
/// `train`: the candidate with most correct predictions summed over the inner
/// folds, among candidates trainable in every inner fold.
fn inner_choice(
    method: &MethodConfig,
    grids: &HyperGrids,
    train: &FunctionalDataset,
    scheme: CvScheme,
    rng_stream: RngStream,
) -> Result<Choice> {
    let folds = stratified_folds(train.labels(), scheme, &mut rng_stream.rng())?;
    let n = train.n_samples();
    let mut totals: BTreeMap<Choice, (usize, usize)> = BTreeMap::new();
    for fold in &folds {
        let inner_train = train.subset(&complement(n, fold))?;
        let inner_test = train.subset(fold)?;
        for (choice, correct) in score_candidates(method, grids, &inner_train, &inner_test)? {
            let e = totals.entry(choice).or_insert((0, 0));
            e.0 += correct;
            e.1 += 1;
        }
    }
    let complete: Vec<(Choice, usize)> = totals
        .into_iter()
        .filter(|(_, (_, seen))| *seen == folds.len())
        .map(|(c, (correct, _))| (c, correct))
        .collect();
    best_choice(&complete).map(|(c, _)| c).ok_or_else(|| {
        Error::Numerical(format!(
            "no candidate of {} trains in every inner fold",
            method.label()
        ))
    })
}

/// Outer cross-validation estimate of accuracy, with hyperparameters chosen
/// by an inner cross-validation on each outer training set. Outer folds use
/// stream 0 of `seed`; the inner split of outer fold `f` uses stream `f + 1`.
pub fn cross_validate(
    dataset: &FunctionalDataset,
    method: &MethodConfig,
    grids: &HyperGrids,
    scheme: CvScheme,
    seed: u64,
) -> Result<CvOutcome> {
    method.validate()?;
    grids.validate()?;
    let n = dataset.n_samples();
    let folds = stratified_folds(dataset.labels(), scheme, &mut RngStream::new(seed, 0).rng())?;
    let outcomes: Vec<FoldOutcome> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let train = dataset.subset(&complement(n, fold))?;
            let test = dataset.subset(fold)?;
            let choice = inner_choice(
                method,
                grids,
                &train,
                scheme,
                RngStream::new(seed, f as u64 + 1),
            )?;
            let pipeline = TrainedPipeline::fit(method, choice, &train)?;
            Ok(FoldOutcome {
                choice,
                n_features: pipeline.n_features(),
                correct: pipeline.correct(&test)?,
                size: fold.len(),
            })
        })
        .collect::<Result<_>>()?;
    let correct: usize = outcomes.iter().map(|o| o.correct).sum();
    Ok(CvOutcome {
        accuracy: correct as f64 / n as f64,
        folds: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Classifier;
    use crate::data::Grid;
    use crate::selectors::Method;

    fn grid(n: usize) -> Grid {
        Grid::new((1..=n).map(|i| i as f64 / n as f64).collect()).unwrap()
    }

    #[test]
    fn k_fold_partitions_and_stratifies() {
        let labels: Vec<Label> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        let folds = stratified_folds(
            &labels,
            CvScheme::KFold { k: 10 },
            &mut RngStream::new(1, 0).rng(),
        )
        .unwrap();
        let mut seen = vec![0; 100];
        for f in &folds {
            assert!(f.len() == 10);
            let ones = f.iter().filter(|&&i| labels[i] == 1).count();
            assert!((3..=4).contains(&ones));
            f.iter().for_each(|&i| seen[i] += 1);
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn folds_are_seeded() {
        let labels: Vec<Label> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        let s = CvScheme::KFold { k: 3 };
        let a = stratified_folds(&labels, s, &mut RngStream::new(4, 0).rng()).unwrap();
        let b = stratified_folds(&labels, s, &mut RngStream::new(4, 0).rng()).unwrap();
        let c = stratified_folds(&labels, s, &mut RngStream::new(5, 0).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stratification_errors() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(
            stratified_folds(&[0, 0, 0], CvScheme::LeaveOneOut, &mut rng),
            Err(Error::Stratification(_))
        ));
        // a lone class-1 sample leaves its fold's training part without class 1
        assert!(matches!(
            stratified_folds(&[0, 0, 0, 1], CvScheme::LeaveOneOut, &mut rng),
            Err(Error::Stratification(_))
        ));
        assert!(stratified_folds(&[0, 1, 0, 1], CvScheme::KFold { k: 5 }, &mut rng).is_err());
    }

    #[test]
    fn loo_separable_lda_is_perfect() {
        let values = [-3.0, -2.5, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 2.5, 3.0];
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v, 0.1 * v * v]).collect();
        let labels: Vec<Label> = values.iter().map(|&v| u8::from(v > 0.0)).collect();
        let ds = FunctionalDataset::from_rows(grid(2), &rows, labels).unwrap();
        let m = MethodConfig::new(Method::T, Classifier::LDA);
        let grids = HyperGrids::singleton(1, 1, 1, 1);
        let out = cross_validate(&ds, &m, &grids, CvScheme::LeaveOneOut, 0).unwrap();
        assert_eq!(out.accuracy, 1.0);
        assert_eq!(out.folds.len(), 10);
    }

    #[test]
    fn loo_duplicates_are_recognized_by_one_nn() {
        let rows = vec![
            vec![0.0, 5.0],
            vec![0.0, 5.0],
            vec![9.0, -1.0],
            vec![9.0, -1.0],
            vec![4.0, 4.0],
            vec![3.0, 0.0],
        ];
        let labels = vec![0, 0, 1, 1, 1, 0];
        let ds = FunctionalDataset::from_rows(grid(2), &rows, labels).unwrap();
        let m = MethodConfig::new(Method::BASE, Classifier::KNN);
        let grids = HyperGrids::singleton(1, 1, 1, 1);
        let out = cross_validate(&ds, &m, &grids, CvScheme::LeaveOneOut, 0).unwrap();
        for i in 0..4 {
            assert_eq!(out.folds[i].correct, 1);
        }
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let model = crate::simulation::registry::prop2(1.5, 0.5);
        let ds =
            crate::simulation::sample_model(&model, 40, &mut RngStream::new(9, 9).rng()).unwrap();
        let m = MethodConfig::new(Method::MHV, Classifier::KNN);
        let grids = HyperGrids {
            k: vec![1, 3],
            dims: vec![1, 2],
            h: vec![3, 8],
            pls_components: vec![1],
        };
        let s = CvScheme::KFold { k: 5 };
        let a = cross_validate(&ds, &m, &grids, s, 3).unwrap();
        let b = cross_validate(&ds, &m, &grids, s, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.folds.iter().map(|f| f.size).sum::<usize>(), 40);
        assert!(a.accuracy > 0.5);
    }
}
