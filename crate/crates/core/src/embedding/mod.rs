//! node2vec: biased second-order random walks and skip-gram training.

mod model;
mod train;
mod walk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use model::EmbeddingModel;
pub use train::{objective, objective_gradient, softmax_probability, train, NoiseSampler};
pub use walk::{
    generate_walks, neighborhood_pairs, sample_next, transition_distribution, WalkCorpus,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
        }
    }
}

impl WalkConfig {
    /// Small profile for laptop-scale runs and tests.
    pub fn desk() -> Self {
        WalkConfig {
            walk_length: 20,
            walks_per_node: 5,
            window: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Config(format!(
                "p and q must be positive, got p={} q={}",
                self.p, self.q
            )));
        }
        if self.walk_length < 2 {
            return Err(Error::Config("walk_length must be at least 2".into()));
        }
        if self.walks_per_node < 1 || self.window < 1 {
            return Err(Error::Config(
                "walks_per_node and window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Full softmax over all nodes with a single vector per node.
    ExactSoftmax,
    /// Skip-gram with negative sampling, separate input and context vectors.
    NegativeSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Set from the run's master seed rather than read from config files.
    #[serde(skip)]
    pub seed: u64,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            negatives: 5,
            epochs: 5,
            lr_initial: 0.025,
            lr_final: 0.0001,
            seed: 42,
            mode: TrainMode::NegativeSampling,
        }
    }
}

impl TrainConfig {
    pub fn desk() -> Self {
        TrainConfig {
            dim: 16,
            ..Self::default()
        }
    }

    /// Zero epochs is accepted here and means "return the initialization".
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config("dim must be at least 2".into()));
        }
        if self.negatives < 1 {
            return Err(Error::Config("negatives must be at least 1".into()));
        }
        let lr_ok = |x: f64| x > 0.0 && x.is_finite();
        if !lr_ok(self.lr_initial) || !lr_ok(self.lr_final) || self.lr_final > self.lr_initial {
            return Err(Error::Config(format!(
                "need 0 < lr_final <= lr_initial, got {} and {}",
                self.lr_final, self.lr_initial
            )));
        }
        Ok(())
    }
}
