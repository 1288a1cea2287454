//! The per-target chain: rules, ensemble, graph, walks, embedding, ranking.

use std::collections::BTreeMap;

use crate::dataset::{
    interest_profiles, popularity_ranking, Catalog, InterestProfile, PopularityTable, ProfileMap,
    RatingTable, UserId,
};
use crate::embedding::{
    generate_walks, train, EmbeddingModel, TrainConfig, WalkConfig, WalkCorpus,
};
use crate::ensemble::{
    enumerate_fuzzy_rules, select_ensemble_with_fallback, ClassInputs, ClassOptions,
    EnsembleSelection, FuzzyRule,
};
use crate::error::Result;
use crate::graph::{build_hetero_graph, GraphInputs, GraphOptions, HeteroGraph};
use crate::recommend::{
    build_utv, rank_candidates, representative_nodes, Aggregate, Recommendation, Utv,
};
use crate::rng::derive_seed;

const WALK_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub classes: ClassOptions,
    pub top_n_popular: usize,
    pub graph: GraphOptions,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub aggregate: Aggregate,
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            classes: ClassOptions::default(),
            top_n_popular: 5,
            graph: GraphOptions::default(),
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            aggregate: Aggregate::Max,
            seed: 42,
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        self.train.validate()?;
        if self.top_n_popular == 0 {
            return Err(crate::Error::Config(
                "top_n_popular must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Walk seed and training config for one target.
    pub fn target_streams(&self, target: UserId) -> (u64, TrainConfig) {
        let walk_seed = derive_seed(self.seed, &[target as u64, WALK_STREAM]);
        let train = TrainConfig {
            seed: derive_seed(self.seed, &[target as u64, TRAIN_STREAM]),
            ..self.train
        };
        (walk_seed, train)
    }
}

/// Tables derived once from a rating table and shared by every target.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub ratings: &'a RatingTable,
    pub profiles: Option<&'a ProfileMap>,
    pub catalog: &'a Catalog,
    pub interests: BTreeMap<UserId, InterestProfile>,
    pub popularity: PopularityTable,
}

impl<'a> Prepared<'a> {
    pub fn new(
        ratings: &'a RatingTable,
        profiles: Option<&'a ProfileMap>,
        catalog: &'a Catalog,
        top_n_popular: usize,
    ) -> Result<Self> {
        Ok(Prepared {
            ratings,
            profiles,
            catalog,
            interests: interest_profiles(ratings),
            popularity: popularity_ranking(ratings, catalog, top_n_popular)?,
        })
    }

    pub fn class_inputs(&self) -> ClassInputs<'_> {
        ClassInputs {
            ratings: self.ratings,
            profiles: self.profiles,
            interests: &self.interests,
            catalog: self.catalog,
            popularity: &self.popularity,
        }
    }

    pub fn graph_inputs(&self) -> GraphInputs<'_> {
        GraphInputs {
            interests: &self.interests,
            popularity: &self.popularity,
            catalog: self.catalog,
        }
    }
}

pub fn rules_stage(
    target: UserId,
    data: &Prepared<'_>,
    config: &MethodConfig,
) -> Result<(Vec<FuzzyRule>, EnsembleSelection)> {
    let rules = enumerate_fuzzy_rules(target, &data.class_inputs(), &config.classes)?;
    let selection = select_ensemble_with_fallback(target, &rules);
    Ok((rules, selection))
}

pub fn graph_stage(
    target: UserId,
    selection: &EnsembleSelection,
    data: &Prepared<'_>,
    config: &MethodConfig,
) -> Result<HeteroGraph> {
    build_hetero_graph(target, selection, &data.graph_inputs(), &config.graph)
}

pub fn embed_stage(
    graph: &HeteroGraph,
    config: &MethodConfig,
) -> Result<(WalkCorpus, EmbeddingModel)> {
    let (walk_seed, train_config) = config.target_streams(graph.target);
    let corpus = generate_walks(graph.adjacency(), &config.walk, walk_seed);
    let model = train(&corpus, graph.adjacency(), &train_config, &config.walk)?;
    Ok((corpus, model))
}

/// Everything produced for one target.
#[derive(Debug, Clone)]
pub struct TargetRun {
    pub rules: Vec<FuzzyRule>,
    pub selection: EnsembleSelection,
    pub graph: HeteroGraph,
    pub corpus: WalkCorpus,
    pub model: EmbeddingModel,
    pub utv: Utv,
    /// Every movie of the similar-class sub-graphs, scored and sorted best
    /// first, including movies the target already rated.
    pub scored: Vec<Recommendation>,
}

impl TargetRun {
    /// Top `k` movies the target has not rated in `data`.
    pub fn top_k(&self, k: usize, ratings: &RatingTable) -> Vec<Recommendation> {
        self.scored
            .iter()
            .filter(|r| ratings.rating(self.utv.user_id, r.movie_id).is_none())
            .take(k)
            .cloned()
            .collect()
    }
}

pub fn run_target(target: UserId, data: &Prepared<'_>, config: &MethodConfig) -> Result<TargetRun> {
    let (rules, selection) = rules_stage(target, data, config)?;
    let graph = graph_stage(target, &selection, data, config)?;
    let (corpus, model) = embed_stage(&graph, config)?;
    let utv = build_utv(target, &graph, &model)?;
    let scored = rank_candidates(
        &utv,
        &representative_nodes(&graph),
        &model,
        config.aggregate,
    )?;
    Ok(TargetRun {
        rules,
        selection,
        graph,
        corpus,
        model,
        utv,
        scored,
    })
}
