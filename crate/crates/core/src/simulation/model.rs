//! Declarative two-class models and dataset generation.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FunctionalDataset, Grid, Label};
use crate::error::{Error, Result};

use super::process::{sample_process, ProcessSpec};
use super::{bridge_grid, default_grid};

/// One term `coef · x(t_point)^power` of a logistic link. `point` is 1-based,
/// so `point = 30` is the 30th grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub point: usize,
    #[serde(default = "one_u32")]
    pub power: u32,
    pub coef: f64,
}

fn one_u32() -> u32 {
    1
}

impl Monomial {
    pub fn new(point: usize, power: u32, coef: f64) -> Self {
        Monomial { point, power, coef }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub process: ProcessSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    /// Class-conditional laws with `P(Y = 1) = p`.
    Conditional {
        p: f64,
        class0: ProcessSpec,
        class1: ProcessSpec,
    },
    /// Marginal law of `X` plus `P(Y = 1 | X = x) = 1 / (1 + exp(-Ψ(x)))`.
    Logistic {
        marginal: ProcessSpec,
        #[serde(default)]
        link: Vec<Monomial>,
        #[serde(default)]
        intercept: f64,
    },
    /// Class-conditional laws that are finite mixtures.
    Mixture {
        p: f64,
        class0: Vec<MixtureComponent>,
        class1: Vec<MixtureComponent>,
    },
}

fn check_prior(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "class prior p = {} must lie in (0, 1)",
            p
        )))
    }
}

fn check_mixture(components: &[MixtureComponent], class: u8, n_points: usize) -> Result<()> {
    if components.is_empty() {
        return Err(Error::param(format!(
            "class {} mixture has no components",
            class
        )));
    }
    let mut total = 0.0;
    for c in components {
        if !(c.weight > 0.0 && c.weight.is_finite()) {
            return Err(Error::param(format!(
                "class {} mixture weight {} is not positive",
                class, c.weight
            )));
        }
        total += c.weight;
        c.process.validate(Some(n_points))?;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!(
            "class {} mixture weights sum to {}, not 1",
            class, total
        )));
    }
    Ok(())
}

impl ModelSpec {
    fn processes(&self) -> Vec<&ProcessSpec> {
        match self {
            ModelSpec::Conditional { class0, class1, .. } => vec![class0, class1],
            ModelSpec::Logistic { marginal, .. } => vec![marginal],
            ModelSpec::Mixture { class0, class1, .. } => {
                class0.iter().chain(class1).map(|c| &c.process).collect()
            }
        }
    }

    /// Default grid, or the shortened grid when any process is a bridge.
    pub fn grid(&self) -> Grid {
        if self.processes().iter().any(|p| p.family.involves_bridge()) {
            bridge_grid()
        } else {
            default_grid()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n_points = self.grid().len();
        match self {
            ModelSpec::Conditional { p, class0, class1 } => {
                check_prior(*p)?;
                class0.validate(Some(n_points))?;
                class1.validate(Some(n_points))
            }
            ModelSpec::Logistic {
                marginal,
                link,
                intercept,
            } => {
                marginal.validate(Some(n_points))?;
                if !intercept.is_finite() {
                    return Err(Error::param("link intercept must be finite"));
                }
                for m in link {
                    if m.point == 0 || m.point > n_points {
                        return Err(Error::param(format!(
                            "link point {} outside 1..={}",
                            m.point, n_points
                        )));
                    }
                    if !m.coef.is_finite() {
                        return Err(Error::param("link coefficients must be finite"));
                    }
                }
                Ok(())
            }
            ModelSpec::Mixture { p, class0, class1 } => {
                check_prior(*p)?;
                check_mixture(class0, 0, n_points)?;
                check_mixture(class1, 1, n_points)
            }
        }
    }

    /// Link value `Ψ(x)` for logistic models.
    pub fn link_value(&self, x: &[f64]) -> Option<f64> {
        match self {
            ModelSpec::Logistic {
                link, intercept, ..
            } => Some(
                intercept
                    + link
                        .iter()
                        .map(|m| m.coef * x[m.point - 1].powi(m.power as i32))
                        .sum::<f64>(),
            ),
            _ => None,
        }
    }
}

pub(crate) fn logistic(psi: f64) -> f64 {
    1.0 / (1.0 + (-psi).exp())
}

fn pick_component<'a, R: Rng + ?Sized>(
    components: &'a [MixtureComponent],
    rng: &mut R,
) -> &'a ProcessSpec {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for c in components {
        acc += c.weight;
        if u < acc {
            return &c.process;
        }
    }
    &components.last().expect("validated non-empty").process
}

/// Draws `n` labelled trajectories. Each sample consumes its label draw first
/// and its trajectory second, so the same rng state always gives the same
/// dataset.
pub fn sample_model<R: Rng + ?Sized>(
    model: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<FunctionalDataset> {
    model.validate()?;
    if n == 0 {
        return Err(Error::param("sample size must be positive"));
    }
    let grid = model.grid();
    let n_points = grid.len();
    let mut data = DMatrix::zeros(n, n_points);
    let mut labels: Vec<Label> = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = match model {
            ModelSpec::Conditional { p, class0, class1 } => {
                let y = rng.random::<f64>() < *p;
                let spec = if y { class1 } else { class0 };
                (sample_process(spec, &grid, rng)?, y)
            }
            ModelSpec::Mixture { p, class0, class1 } => {
                let y = rng.random::<f64>() < *p;
                let spec = pick_component(if y { class1 } else { class0 }, rng);
                (sample_process(spec, &grid, rng)?, y)
            }
            ModelSpec::Logistic { marginal, .. } => {
                let x = sample_process(marginal, &grid, rng)?;
                let eta = logistic(model.link_value(&x).expect("logistic model"));
                let y = rng.random::<f64>() < eta;
                (x, y)
            }
        };
        data.row_mut(i).copy_from_slice(&x);
        labels.push(Label::from(y));
    }
    FunctionalDataset::new(grid, data, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::process::{ProcessFamily, TrendSpec};
    use crate::simulation::{registry, RngStream};

    #[test]
    fn null_link_gives_fair_labels() {
        let model = registry::null_model();
        let ds = sample_model(&model, 4000, &mut RngStream::new(5, 0).rng()).unwrap();
        let mean = ds.class_counts().1 as f64 / 4000.0;
        assert!((mean - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt());
    }

    #[test]
    fn link_monomials_use_one_based_points() {
        let l2 = registry::l2_ou();
        let x: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        // 10 x30 + 10 x70 = 3 + 7
        assert!((l2.link_value(&x).unwrap() - 10.0).abs() < 1e-12);
        let l8 = registry::l8_b();
        let expected = 10.0 * 0.5f64.powi(4) + 50.0 * 0.8f64.powi(3) + 20.0 * 0.3f64.powi(2);
        assert!((l8.link_value(&x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        for name in registry::names() {
            let m = registry::get(name).unwrap();
            let a = sample_model(&m, 20, &mut RngStream::new(1, 9).rng()).unwrap();
            let b = sample_model(&m, 20, &mut RngStream::new(1, 9).rng()).unwrap();
            assert_eq!(a, b, "{}", name);
            assert_eq!(a.grid(), &m.grid());
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let b = ProcessSpec::new(ProcessFamily::Brownian);
        let bad_p = ModelSpec::Conditional {
            p: 1.0,
            class0: b.clone(),
            class1: b.clone(),
        };
        assert!(bad_p.validate().is_err());
        let bad_link = ModelSpec::Logistic {
            marginal: b.clone(),
            link: vec![Monomial::new(101, 1, 1.0)],
            intercept: 0.0,
        };
        assert!(bad_link.validate().is_err());
        let bad_weights = ModelSpec::Mixture {
            p: 0.5,
            class0: vec![MixtureComponent {
                weight: 0.7,
                process: b.clone(),
            }],
            class1: vec![MixtureComponent {
                weight: 1.0,
                process: b.clone(),
            }],
        };
        assert!(bad_weights.validate().is_err());
        let bad_peak = ModelSpec::Conditional {
            p: 0.5,
            class0: b.clone(),
            class1: b.with_trend(TrendSpec::Peak { m: 2, k: 3 }),
        };
        assert!(bad_peak.validate().is_err());
        assert!(sample_model(&registry::prop1(0.5), 0, &mut RngStream::new(1, 1).rng()).is_err());
    }

    #[test]
    fn bridge_models_use_shortened_grid() {
        let m = registry::bridge();
        assert!(*m.grid().points().last().unwrap() < 1.0);
        assert_eq!(registry::prop1(0.5).grid(), default_grid());
    }

    #[test]
    fn mixture_weights_are_respected() {
        let b = ProcessSpec::new(ProcessFamily::Brownian);
        let model = ModelSpec::Mixture {
            p: 0.5,
            class0: vec![MixtureComponent {
                weight: 1.0,
                process: b.clone(),
            }],
            class1: vec![
                MixtureComponent {
                    weight: 0.25,
                    process: b.clone().with_trend(TrendSpec::Linear { c: 50.0 }),
                },
                MixtureComponent {
                    weight: 0.75,
                    process: b.with_trend(TrendSpec::Linear { c: -50.0 }),
                },
            ],
        };
        let ds = sample_model(&model, 4000, &mut RngStream::new(3, 3).rng()).unwrap();
        let last = ds.column(99);
        let ones: Vec<f64> = (0..4000)
            .filter(|&i| ds.labels()[i] == 1)
            .map(|i| last[i])
            .collect();
        let share = ones.iter().filter(|&&v| v > 0.0).count() as f64 / ones.len() as f64;
        let se = (0.25 * 0.75 / ones.len() as f64).sqrt();
        assert!((share - 0.25).abs() < 3.0 * se, "{}", share);
    }

    #[test]
    fn model_spec_toml_round_trip() {
        for name in registry::names() {
            let m = registry::get(name).unwrap();
            #[derive(Serialize, Deserialize)]
            struct Wrap {
                model: ModelSpec,
            }
            let text = toml::to_string(&Wrap { model: m.clone() }).unwrap();
            let back: Wrap = toml::from_str(&text).unwrap();
            assert_eq!(back.model, m, "{}\n{}", name, text);
        }
    }
}
