//! Dimension-reduction methods compared against maxima hunting, behind one
//! fit/project interface.

mod mrmr;
mod pls;
mod t_rank;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use mrmr::{
    discretize, f_statistic, mrmr_select, mutual_information, Discretization, MrmrVariant,
};
pub use pls::{pls_fit, PlsFit};
pub use t_rank::{t_scores, t_select, top_k};

use crate::data::{FunctionalDataset, Grid, SelectionResult};
use crate::dcov::{Estimator, Measure};
use crate::error::{Error, Result};
use crate::maxima::{mh_select, MaximaConfig};

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    MHV,
    MHR,
    T,
    FCD,
    FCQ,
    MID,
    MIQ,
    PLS,
    BASE,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::MHV,
        Method::MHR,
        Method::T,
        Method::FCD,
        Method::FCQ,
        Method::MID,
        Method::MIQ,
        Method::PLS,
        Method::BASE,
    ];

    pub fn is_maxima_hunting(self) -> bool {
        matches!(self, Method::MHV | Method::MHR)
    }

    pub fn mrmr_variant(self) -> Option<MrmrVariant> {
        match self {
            Method::FCD => Some(MrmrVariant::FCD),
            Method::FCQ => Some(MrmrVariant::FCQ),
            Method::MID => Some(MrmrVariant::MID),
            Method::MIQ => Some(MrmrVariant::MIQ),
            _ => None,
        }
    }

    /// Whether the method picks grid points (as opposed to linear components).
    pub fn selects_variables(self) -> bool {
        !matches!(self, Method::PLS)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == up)
            .ok_or_else(|| Error::param(format!("unknown method {:?}", s)))
    }
}

/// Optional knobs for the methods that have any.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodParams {
    /// Maxima-hunting window half-width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    /// Estimator behind the MHV curve (MHR always uses DC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    /// Discretization half-width for MI variants, in standard deviations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mi_spread: Option<f64>,
}

impl MethodParams {
    pub fn is_empty(&self) -> bool {
        self.h.is_none() && self.estimator.is_none() && self.mi_spread.is_none()
    }

    pub fn estimator_or_default(&self) -> Estimator {
        self.estimator.unwrap_or(Estimator::U)
    }

    pub fn discretization(&self) -> Discretization {
        self.mi_spread
            .map_or_else(Discretization::default, |spread| Discretization { spread })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub method: Method,
    /// Number of selected variables or PLS components (ignored by BASE).
    pub target_dim: usize,
    #[serde(default)]
    pub params: MethodParams,
}

impl SelectorSpec {
    pub fn new(method: Method, target_dim: usize) -> Self {
        SelectorSpec {
            method,
            target_dim,
            params: MethodParams::default(),
        }
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.method == Method::BASE {
            if !self.params.is_empty() {
                return Err(Error::param("BASE takes no parameters"));
            }
            return Ok(());
        }
        if self.target_dim == 0 || self.target_dim > n_points {
            return Err(Error::param(format!(
                "target dimension {} must be in 1..={}",
                self.target_dim, n_points
            )));
        }
        if let Some(h) = self.params.h {
            if !self.method.is_maxima_hunting() {
                return Err(Error::param(format!(
                    "{} takes no window parameter",
                    self.method
                )));
            }
            if h == 0 || h >= n_points {
                return Err(Error::param(format!("h={} out of range", h)));
            }
        }
        Ok(())
    }
}

/// Default maxima-hunting window used when a spec does not give one.
pub const DEFAULT_H: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionKind {
    IndexSubset(Vec<usize>),
    /// `weights` is `N × c`; features are `(x - means) · weights`.
    LinearMap {
        weights: DMatrix<f64>,
        means: Vec<f64>,
    },
}

/// Fitted map from trajectories to classifier features.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub grid: Grid,
    pub kind: ProjectionKind,
}

impl Projection {
    pub fn index_subset(grid: Grid, indices: Vec<usize>) -> Self {
        Projection {
            grid,
            kind: ProjectionKind::IndexSubset(indices),
        }
    }

    pub fn identity(grid: Grid) -> Self {
        let all = (0..grid.len()).collect();
        Self::index_subset(grid, all)
    }

    /// Number of output features.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ProjectionKind::IndexSubset(ix) => ix.len(),
            ProjectionKind::LinearMap { weights, .. } => weights.ncols(),
        }
    }

    /// Keeps the first `d` features. Every selector here builds its output
    /// sequentially, so this equals a fit with target dimension `d`.
    pub fn truncated(&self, d: usize) -> Self {
        let kind = match &self.kind {
            ProjectionKind::IndexSubset(ix) => {
                ProjectionKind::IndexSubset(ix[..d.min(ix.len())].to_vec())
            }
            ProjectionKind::LinearMap { weights, means } => ProjectionKind::LinearMap {
                weights: weights.columns(0, d.min(weights.ncols())).into_owned(),
                means: means.clone(),
            },
        };
        Projection {
            grid: self.grid.clone(),
            kind,
        }
    }

    /// `n × dim` feature matrix for `dataset`.
    pub fn project(&self, dataset: &FunctionalDataset) -> Result<DMatrix<f64>> {
        if dataset.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let x = dataset.trajectories();
        match &self.kind {
            ProjectionKind::IndexSubset(ix) => Ok(x.select_columns(ix)),
            ProjectionKind::LinearMap { weights, means } => {
                let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
                Ok(centered * weights)
            }
        }
    }
}

/// A fitted selector: the projection to apply plus, for variable-selection
/// methods, which grid points were chosen.
#[derive(Debug, Clone)]
pub struct FittedSelector {
    pub projection: Projection,
    pub selection: Option<SelectionResult>,
}

impl FittedSelector {
    pub fn n_features(&self) -> usize {
        self.projection.dim()
    }
}

pub fn fit(spec: &SelectorSpec, dataset: &FunctionalDataset) -> Result<FittedSelector> {
    spec.validate(dataset.n_points())?;
    let grid = dataset.grid().clone();
    let d = spec.target_dim;
    let selection = match spec.method {
        Method::MHV | Method::MHR => {
            let measure = if spec.method == Method::MHV {
                Measure::V2
            } else {
                Measure::R2
            };
            let config = MaximaConfig::new(spec.params.h.unwrap_or(DEFAULT_H), d)?;
            mh_select(dataset, measure, spec.params.estimator_or_default(), config)?
        }
        Method::T => t_select(dataset, d)?,
        Method::FCD | Method::FCQ | Method::MID | Method::MIQ => {
            let variant = spec.method.mrmr_variant().expect("mrmr method");
            mrmr_select(dataset, d, variant, spec.params.discretization())?
        }
        Method::PLS => {
            let fitted = pls_fit(dataset, d)?;
            return Ok(FittedSelector {
                projection: fitted.projection,
                selection: None,
            });
        }
        Method::BASE => {
            return Ok(FittedSelector {
                projection: Projection::identity(grid),
                selection: None,
            })
        }
    };
    Ok(FittedSelector {
        projection: Projection::index_subset(grid, selection.indices.clone()),
        selection: Some(selection),
    })
}

/// Free-function form of [`Projection::project`].
pub fn project(projection: &Projection, dataset: &FunctionalDataset) -> Result<DMatrix<f64>> {
    projection.project(dataset)
}

pub(crate) fn hyperparams(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
