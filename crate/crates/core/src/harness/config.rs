use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::maxima::DEFAULT_H_GRID;
use crate::selectors::{Method, MethodParams};
use crate::simulation::{registry, ModelSpec};

/// Validation and test set size in simulation mode.
pub const DEFAULT_HOLDOUT_SIZE: usize = 200;
pub const DEFAULT_K_GRID: [usize; 6] = [1, 3, 5, 7, 9, 11];
pub const DEFAULT_MAX_DIM: usize = 20;
pub const DEFAULT_MAX_PLS_COMPONENTS: usize = 10;

/// A registry name or an inline model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Named(String),
    Inline(ModelSpec),
}

impl ModelRef {
    pub fn resolve(&self) -> Result<ModelSpec> {
        match self {
            ModelRef::Named(name) => registry::get(name),
            ModelRef::Inline(spec) => Ok(spec.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelRef::Named(name) => name.clone(),
            ModelRef::Inline(_) => "inline".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme")]
pub enum CvScheme {
    LeaveOneOut,
    KFold { k: usize },
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CvScheme::LeaveOneOut => write!(f, "loo"),
            CvScheme::KFold { k } => write!(f, "{}-fold", k),
        }
    }
}

impl FromStr for CvScheme {
    type Err = Error;

    /// Accepts `loo` or `<k>-fold`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "loo" || lower == "leave-one-out" {
            return Ok(CvScheme::LeaveOneOut);
        }
        lower
            .strip_suffix("-fold")
            .and_then(|k| k.parse().ok())
            .map(|k| CvScheme::KFold { k })
            .ok_or_else(|| Error::Config(format!("unknown CV scheme '{}'", s)))
    }
}

/// One pipeline: a selector followed by a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub selector: Method,
    pub classifier: Classifier,
    #[serde(default, skip_serializing_if = "MethodParams::is_empty")]
    pub params: MethodParams,
}

impl MethodConfig {
    pub fn new(selector: Method, classifier: Classifier) -> Self {
        MethodConfig {
            selector,
            classifier,
            params: MethodParams::default(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.selector, self.classifier)
    }

    pub fn validate(&self) -> Result<()> {
        if self.selector == Method::BASE && self.classifier == Classifier::LDA {
            return Err(Error::Config(
                "BASE with LDA is not supported: the pooled covariance of whole trajectories is singular"
                    .into(),
            ));
        }
        if self.selector == Method::BASE && !self.params.is_empty() {
            return Err(Error::Config("BASE takes no parameters".into()));
        }
        if self.params.h.is_some() && !self.selector.is_maxima_hunting() {
            return Err(Error::Config(format!(
                "{} takes no window parameter h",
                self.selector
            )));
        }
        if self.params.h == Some(0) {
            return Err(Error::Config("h must be at least 1".into()));
        }
        if self.params.estimator.is_some() && self.selector != Method::MHV {
            return Err(Error::Config(format!(
                "{} takes no estimator parameter",
                self.selector
            )));
        }
        if self.params.mi_spread.is_some() && !matches!(self.selector, Method::MID | Method::MIQ) {
            return Err(Error::Config(format!(
                "{} takes no mi_spread parameter",
                self.selector
            )));
        }
        if let Some(s) = self.params.mi_spread {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("mi_spread must be positive".into()));
            }
        }
        Ok(())
    }
}

fn default_k() -> Vec<usize> {
    DEFAULT_K_GRID.to_vec()
}

fn default_dims() -> Vec<usize> {
    (1..=DEFAULT_MAX_DIM).collect()
}

fn default_h() -> Vec<usize> {
    DEFAULT_H_GRID.to_vec()
}

fn default_pls() -> Vec<usize> {
    (1..=DEFAULT_MAX_PLS_COMPONENTS).collect()
}

/// Candidate values searched during validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrids {
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_h")]
    pub h: Vec<usize>,
    #[serde(default = "default_pls")]
    pub pls_components: Vec<usize>,
}

impl Default for HyperGrids {
    fn default() -> Self {
        HyperGrids {
            k: default_k(),
            dims: default_dims(),
            h: default_h(),
            pls_components: default_pls(),
        }
    }
}

impl HyperGrids {
    pub fn singleton(k: usize, dim: usize, h: usize, components: usize) -> Self {
        HyperGrids {
            k: vec![k],
            dims: vec![dim],
            h: vec![h],
            pls_components: vec![components],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [
            ("k", &self.k),
            ("dims", &self.dims),
            ("h", &self.h),
            ("pls_components", &self.pls_components),
        ] {
            if grid.is_empty() {
                return Err(Error::Config(format!("grid '{}' is empty", name)));
            }
            if grid.contains(&0) {
                return Err(Error::Config(format!("grid '{}' contains 0", name)));
            }
        }
        if let Some(k) = self.k.iter().find(|&&k| k % 2 == 0) {
            return Err(Error::Config(format!("k grid value {} is not odd", k)));
        }
        Ok(())
    }
}

fn default_replications() -> usize {
    1
}

fn default_holdout() -> usize {
    DEFAULT_HOLDOUT_SIZE
}

/// A full study. Simulation mode names a `model`; dataset mode names a
/// `dataset` file and is evaluated by nested cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvScheme>,
    #[serde(default)]
    pub train_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Index of the first replication; shifts every stream so disjoint runs
    /// can be concatenated.
    #[serde(default)]
    pub replication_offset: usize,
    #[serde(default = "default_holdout")]
    pub validation_size: usize,
    #[serde(default = "default_holdout")]
    pub test_size: usize,
    pub methods: Vec<MethodConfig>,
    #[serde(default)]
    pub grids: HyperGrids,
}

impl ExperimentConfig {
    /// A simulation study with default grids and holdout sizes.
    pub fn simulation(
        model: ModelRef,
        train_sizes: Vec<usize>,
        replications: usize,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            seed,
            model: Some(model),
            dataset: None,
            cv: None,
            train_sizes,
            replications,
            replication_offset: 0,
            validation_size: DEFAULT_HOLDOUT_SIZE,
            test_size: DEFAULT_HOLDOUT_SIZE,
            methods: Vec::new(),
            grids: HyperGrids::default(),
        }
    }

    pub fn is_simulation(&self) -> bool {
        self.model.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.model, &self.dataset) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either 'model' or 'dataset', not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("give a 'model' or a 'dataset'".into())),
            _ => {}
        }
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        for (i, a) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(a) {
                return Err(Error::Config(format!("method {} listed twice", a.label())));
            }
        }
        self.grids.validate()?;
        if let Some(model) = &self.model {
            if self.cv.is_some() {
                return Err(Error::Config("'cv' applies to dataset mode only".into()));
            }
            model.resolve()?.validate()?;
            if self.train_sizes.is_empty() {
                return Err(Error::Config("train_sizes is empty".into()));
            }
            if let Some(n) = self.train_sizes.iter().find(|&&n| n < 4) {
                return Err(Error::Config(format!("train size {} is below 4", n)));
            }
            if self.replications == 0 {
                return Err(Error::Config("replications must be at least 1".into()));
            }
            if self.validation_size == 0 || self.test_size == 0 {
                return Err(Error::Config(
                    "validation and test sizes must be positive".into(),
                ));
            }
        } else if let Some(CvScheme::KFold { k }) = self.cv {
            if k < 2 {
                return Err(Error::Config("k-fold needs k >= 2".into()));
            }
        }
        Ok(())
    }

    /// Parses and validates a config. A relative dataset path is resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(path), Some(base)) = (&config.dataset, base_dir) {
            if path.is_relative() {
                config.dataset = Some(base.join(path));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Label used for the model column of every report.
    pub fn source_label(&self) -> String {
        match (&self.model, &self.dataset) {
            (Some(m), _) => m.label(),
            (None, Some(p)) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            _ => String::new(),
        }
    }

    /// CV scheme for dataset mode (leave-one-out unless configured).
    pub fn cv_scheme(&self) -> CvScheme {
        self.cv.unwrap_or(CvScheme::LeaveOneOut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 7
model = "prop1"
train_sizes = [30, 50]
replications = 3

[[methods]]
selector = "MHV"
classifier = "KNN"

[[methods]]
selector = "PLS"
classifier = "LDA"
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(BASIC, None).unwrap();
        assert_eq!(c.validation_size, 200);
        assert_eq!(c.test_size, 200);
        assert_eq!(c.grids, HyperGrids::default());
        assert_eq!(c.grids.h, vec![1, 2, 3, 5, 8, 12]);
        assert_eq!(c.grids.dims.len(), 20);
        assert_eq!(c.source_label(), "prop1");
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap(), None).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn inline_model_round_trips() {
        let mut c = ExperimentConfig::from_toml_str(BASIC, None).unwrap();
        c.model = Some(ModelRef::Inline(registry::l2_ou()));
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text, None).unwrap(), c);
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = |edit: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::from_toml_str(BASIC, None).unwrap();
            edit(&mut c);
            c.validate().is_err()
        };
        assert!(bad(&|c| c.methods.clear()));
        assert!(bad(&|c| c
            .methods
            .push(MethodConfig::new(Method::BASE, Classifier::LDA))));
        assert!(bad(&|c| c.grids.k = vec![]));
        assert!(bad(&|c| c.grids.k = vec![2]));
        assert!(bad(&|c| c.grids.dims = vec![]));
        assert!(bad(&|c| c.replications = 0));
        assert!(bad(&|c| c.train_sizes = vec![]));
        assert!(bad(&|c| c.dataset = Some("x.csv".into())));
        assert!(bad(&|c| c.model = Some(ModelRef::Named("nope".into()))));
        assert!(bad(&|c| c.methods[1].params.h = Some(3)));
        assert!(bad(&|c| c.methods.push(c.methods[0].clone())));
        assert!(toml::from_str::<ExperimentConfig>("seed = 1\nmodel = \"prop1\"").is_err());
        assert!(ExperimentConfig::from_toml_str(
            &format!(
                "{}\nunknown_key = 1",
                BASIC.replace("[[methods]]", "bogus = 2\n[[methods]]")
            ),
            None
        )
        .is_err());
    }

    #[test]
    fn cv_scheme_parsing() {
        assert_eq!("loo".parse::<CvScheme>().unwrap(), CvScheme::LeaveOneOut);
        assert_eq!(
            "10-fold".parse::<CvScheme>().unwrap(),
            CvScheme::KFold { k: 10 }
        );
        assert!("ten".parse::<CvScheme>().is_err());
        assert_eq!(CvScheme::KFold { k: 5 }.to_string(), "5-fold");
    }

    #[test]
    fn dataset_paths_resolve_against_config_dir() {
        let text = "dataset = \"data/x.csv\"\n[[methods]]\nselector = \"T\"\nclassifier = \"KNN\"";
        let c = ExperimentConfig::from_toml_str(text, Some(Path::new("/tmp/study"))).unwrap();
        assert_eq!(c.dataset.unwrap(), PathBuf::from("/tmp/study/data/x.csv"));
        assert_eq!(c.cv, None);
    }
}
