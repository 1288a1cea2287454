use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{TrainConfig, WalkConfig};
use crate::ensemble::ClassOptions;
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, SplitSpec};
use crate::graph::GraphOptions;
use crate::method::MethodConfig;
use crate::recommend::Aggregate;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub ratings: PathBuf,
    pub movies: PathBuf,
    /// Demographics are optional; without them the profile class spans all users.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub user_ranges: Vec<usize>,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub relevance_threshold: u8,
    pub auc_threshold: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_targets_per_range: Option<usize>,
    pub cf_neighbors: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        let e = EvalConfig::default();
        EvaluationSection {
            user_ranges: e.user_ranges,
            train_fraction: e.split.train_fraction,
            repetitions: e.split.repetitions,
            relevance_threshold: e.relevance_threshold,
            auc_threshold: e.auc_threshold,
            max_targets_per_range: e.max_targets_per_range,
            cf_neighbors: e.cf_neighbors,
        }
    }
}

/// Everything a run needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub deterministic: bool,
    pub min_shared: usize,
    pub top_n_popular: usize,
    pub selection_means_rated: bool,
    pub intra_subgraph_edges: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_movies_per_subgraph: Option<usize>,
    pub k: usize,
    pub aggregate: Aggregate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataPaths>,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub evaluation: EvaluationSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            deterministic: true,
            min_shared: 1,
            top_n_popular: 5,
            selection_means_rated: false,
            intra_subgraph_edges: false,
            max_movies_per_subgraph: None,
            k: 10,
            aggregate: Aggregate::Max,
            data: None,
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.method().validate()?;
        self.eval().validate()?;
        if self.min_shared == 0 {
            return Err(Error::Config("min_shared must be at least 1".into()));
        }
        if self.max_movies_per_subgraph == Some(0) {
            return Err(Error::Config(
                "max_movies_per_subgraph must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn method(&self) -> MethodConfig {
        MethodConfig {
            classes: ClassOptions {
                min_shared: self.min_shared,
                selection_means_rated: self.selection_means_rated,
            },
            top_n_popular: self.top_n_popular,
            graph: GraphOptions {
                intra_subgraph_edges: self.intra_subgraph_edges,
                max_movies_per_subgraph: self.max_movies_per_subgraph,
            },
            walk: self.walk,
            train: TrainConfig {
                seed: self.seed,
                ..self.train
            },
            aggregate: self.aggregate,
            seed: self.seed,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        let e = &self.evaluation;
        EvalConfig {
            split: SplitSpec {
                train_fraction: e.train_fraction,
                repetitions: e.repetitions,
                seed: self.seed,
            },
            user_ranges: e.user_ranges.clone(),
            k: self.k,
            relevance_threshold: e.relevance_threshold,
            auc_threshold: e.auc_threshold,
            max_targets_per_range: e.max_targets_per_range,
            cf_neighbors: e.cf_neighbors,
        }
    }
}
