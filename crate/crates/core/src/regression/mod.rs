//! Regression backends mapping feature space into the latent space.
//!
//! A backend is anything that can be fitted to `(input, latent target)` pairs
//! and then predicts a latent point. Backends that also predict a diagonal
//! normal density over the latent space make class probabilities available.

pub mod gpr;
pub mod kernel;
pub mod optimize;

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gpr::{fit_gpr, FittedGpr, GprBackend, GprConfig};
pub use kernel::{matern_kernel, MaternNu};

/// Independent normal distribution per latent dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDensity {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// A trained regressor.
pub trait FittedRegressor: Send + Sync + Debug {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Point prediction; the mode of [`predict_density`](Self::predict_density)
    /// when that is available.
    fn predict_mean(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict_density(&self, _x: &[f64]) -> Result<PredictiveDensity> {
        Err(Error::MissingDensity(format!("{self:?}")))
    }

    /// Serializable state, if the backend supports persistence. Training
    /// inputs and targets are stored by the caller.
    fn snapshot(&self) -> Option<RegressorSnapshot> {
        None
    }
}

/// Fits a [`FittedRegressor`]. Fitting must be deterministic given the seed.
pub trait RegressionBackend: Send + Sync {
    fn name(&self) -> &str;

    fn fit(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>], seed: u64) -> Result<Arc<dyn FittedRegressor>>;
}

/// Persisted regressor state, restored by refitting on the stored data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum RegressorSnapshot {
    Gpr {
        config: GprConfig,
        hyperparameters: Vec<gpr::Hyperparameters>,
    },
}

impl RegressorSnapshot {
    /// Rebuilds the regressor deterministically from its training data.
    pub fn restore(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Arc<dyn FittedRegressor>> {
        match self {
            RegressorSnapshot::Gpr { config, hyperparameters } => Ok(Arc::new(FittedGpr::from_hyperparameters(
                config.clone(),
                inputs,
                targets,
                hyperparameters,
            )?)),
        }
    }
}

type Registry = RwLock<HashMap<String, Arc<dyn RegressionBackend>>>;

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut m: HashMap<String, Arc<dyn RegressionBackend>> = HashMap::new();
        m.insert("gpr".into(), Arc::new(GprBackend::default()));
        RwLock::new(m)
    })
}

/// Registers a backend under its [`RegressionBackend::name`], replacing any
/// previous backend of that name except the built-in `gpr`.
pub fn register_backend(backend: Arc<dyn RegressionBackend>) -> Result<()> {
    let name = backend.name().to_owned();
    if name == "gpr" {
        return Err(Error::InvalidConfig("backend name `gpr` is reserved".into()));
    }
    registry().write().expect("backend registry poisoned").insert(name, backend);
    Ok(())
}

pub fn backend(name: &str) -> Result<Arc<dyn RegressionBackend>> {
    registry()
        .read()
        .expect("backend registry poisoned")
        .get(name)
        .cloned()
        .ok_or_else(|| Error::Unknown {
            kind: "regression backend",
            name: name.to_owned(),
        })
}
