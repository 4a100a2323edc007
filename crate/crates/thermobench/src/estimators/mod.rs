//! The classical regression families behind one estimator contract.

mod binning;
mod forest;
mod knn;
mod linear;
mod piecewise;
mod quadratic;
mod svr;
mod weighted;

pub use binning::{fit_binning, BinnedModel};
pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_linear, LinearModel};
pub use piecewise::{fit_piecewise, PiecewiseModel};
pub use quadratic::{fit_quadratic, QuadraticModel};
pub use svr::{fit_svr, SvrModel, SvrParams};
pub use weighted::{fit_weighted, silverman_bandwidth, DensitySpace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// Hyperparameter record per model family. Defaults follow the benchmark
/// configuration table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Linear {
        lambda: f64,
    },
    Quadratic {
        lambda: f64,
        max_degree: u32,
    },
    Weighted {
        space: DensitySpace,
    },
    Binning {
        n_bins: usize,
        driver: String,
    },
    Piecewise {
        breakpoints: usize,
        driver: String,
    },
    Knn {
        k: usize,
    },
    Svr {
        c: f64,
        epsilon: f64,
        gamma: Option<f64>,
    },
    Forest {
        n_estimators: usize,
        seed: u64,
    },
}

impl EstimatorSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            EstimatorSpec::Linear { .. } => "linear",
            EstimatorSpec::Quadratic { .. } => "quadratic",
            EstimatorSpec::Weighted { .. } => "weighted",
            EstimatorSpec::Binning { .. } => "binning",
            EstimatorSpec::Piecewise { .. } => "piecewise",
            EstimatorSpec::Knn { .. } => "knn",
            EstimatorSpec::Svr { .. } => "svr",
            EstimatorSpec::Forest { .. } => "forest",
        }
    }

    /// Fit this specification on a feature matrix with target.
    pub fn fit(&self, m: &FeatureMatrix) -> Result<TrainedModel> {
        Ok(match self {
            EstimatorSpec::Linear { lambda } => TrainedModel::Linear(fit_linear(m, *lambda)?),
            EstimatorSpec::Quadratic { lambda, max_degree } => {
                TrainedModel::Quadratic(fit_quadratic(m, *lambda, *max_degree, 2000)?)
            }
            EstimatorSpec::Weighted { space } => TrainedModel::Weighted(fit_weighted(m, *space)?),
            EstimatorSpec::Binning { n_bins, driver } => {
                TrainedModel::Binned(fit_binning(m, *n_bins, driver)?)
            }
            EstimatorSpec::Piecewise { breakpoints, driver } => {
                TrainedModel::Piecewise(fit_piecewise(m, *breakpoints, driver)?)
            }
            EstimatorSpec::Knn { k } => TrainedModel::Knn(fit_knn(m, *k)?),
            EstimatorSpec::Svr { c, epsilon, gamma } => TrainedModel::Svr(fit_svr(
                m,
                &SvrParams {
                    c: *c,
                    epsilon: *epsilon,
                    gamma: *gamma,
                    ..SvrParams::default()
                },
            )?),
            EstimatorSpec::Forest { n_estimators, seed } => TrainedModel::Forest(fit_forest(
                m,
                &ForestConfig {
                    n_estimators: *n_estimators,
                    seed: *seed,
                    ..ForestConfig::default()
                },
            )?),
        })
    }
}

/// An immutable fitted model exposing a uniform predict contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Linear(LinearModel),
    Quadratic(QuadraticModel),
    Weighted(LinearModel),
    Binned(BinnedModel),
    Piecewise(PiecewiseModel),
    Knn(KnnModel),
    Svr(SvrModel),
    Forest(ForestModel),
}

impl TrainedModel {
    /// Feature names (and order) the model was trained on.
    pub fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::Linear(m) | TrainedModel::Weighted(m) => &m.feature_names,
            TrainedModel::Quadratic(m) => &m.base_names,
            TrainedModel::Binned(m) => &m.feature_names,
            TrainedModel::Piecewise(m) => &m.base_names,
            TrainedModel::Knn(m) => &m.feature_names,
            TrainedModel::Svr(m) => &m.feature_names,
            TrainedModel::Forest(m) => &m.feature_names,
        }
    }

    /// Deterministic predictions, one per input row. Column names and
    /// order must match training.
    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        check_columns(self.feature_names(), &m.names)?;
        Ok(match self {
            TrainedModel::Linear(lm) | TrainedModel::Weighted(lm) => lm.predict(&m.values),
            TrainedModel::Quadratic(qm) => qm.predict(&m.values)?,
            TrainedModel::Binned(bm) => bm.predict(&m.values),
            TrainedModel::Piecewise(pm) => pm.predict(&m.values),
            TrainedModel::Knn(km) => km.predict(&m.values),
            TrainedModel::Svr(sm) => sm.predict(&m.values),
            TrainedModel::Forest(fm) => fm.predict(&m.values),
        })
    }
}

fn check_columns(expected: &[String], got: &[String]) -> Result<()> {
    if expected == got {
        return Ok(());
    }
    let missing: Vec<&String> = expected.iter().filter(|n| !got.contains(n)).collect();
    let extra: Vec<&String> = got.iter().filter(|n| !expected.contains(n)).collect();
    Err(Error::data(format!(
        "feature mismatch: missing {missing:?}, extra {extra:?} (order must match training)"
    )))
}

/// Versioned serialization wrapper for model artifacts.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub const VERSION: u32 = 1;

    pub fn wrap(model: TrainedModel) -> ModelArtifact {
        ModelArtifact {
            version: Self::VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ModelArtifact> {
        let a: ModelArtifact = serde_json::from_str(text)?;
        if a.version != Self::VERSION {
            return Err(Error::config(format!(
                "unsupported model artifact version {}",
                a.version
            )));
        }
        Ok(a)
    }
}
