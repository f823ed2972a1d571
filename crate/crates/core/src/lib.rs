//! Maxima-hunting variable selection for binary classification of functional
//! data.
//!
//! A trajectory observed on a grid `t_1 < … < t_N` is reduced to the values at
//! the local maxima of `t ↦ V²(X_t, Y)`, the distance covariance between the
//! marginal at `t` and the label. The crate also provides the competing
//! selectors (univariate t ranking, mRMR, PLS), two classifiers (k-NN and
//! LDA), Gaussian-process simulators with closed-form Bayes rules, and an
//! experiment harness.
//!
//! ```
//! use maxhunt::{dcov::Estimator, maxima::{mh_select, MaximaConfig}, simulation};
//!
//! let model = simulation::registry::prop2(1.0, 0.5);
//! let mut rng = simulation::RngStream::new(1, 0).rng();
//! let data = simulation::sample_model(&model, 100, &mut rng).unwrap();
//! let sel = mh_select(&data, maxhunt::dcov::Measure::V2, Estimator::U,
//!                     MaximaConfig::new(3, 20).unwrap()).unwrap();
//! assert!(!sel.indices.is_empty());
//! ```

pub mod classifiers;
pub mod data;
pub mod dcov;
pub mod error;
pub mod harness;
pub mod maxima;
pub mod selectors;
pub mod simulation;

pub use classifiers::{Classifier, KnnModel, LdaModel};
pub use data::{FunctionalDataset, Grid, Label, SelectionResult};
pub use dcov::{DependenceCurve, Estimator, Measure};
pub use error::{Error, Result};
pub use selectors::{FittedSelector, Method, MethodParams, Projection, SelectorSpec};
pub use simulation::{ModelSpec, ProcessSpec, RngStream, TrendSpec};
