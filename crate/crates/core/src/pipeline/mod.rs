//! Stage-by-stage orchestration with on-disk artifacts and a run manifest.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json
//! tables/{ratings,movies,users}.csv
//! targets/<user>-<hash8>/{rules.csv,tree.dot,ensemble.json,graph.nodes.csv,graph.edges,
//!                         walks.txt,model.txt,recommendations.csv}
//! evaluation/{precision,recall,accuracy,f1,rmse,auc}.csv, summary.txt, report.json
//! ```
//!
//! Per-target directories are keyed by the config hash, so changing any
//! setting starts a fresh set of artifacts instead of reusing stale ones.

mod config;
mod manifest;
mod store;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{DataPaths, EvaluationSection, PipelineConfig};
pub use manifest::{fingerprint, RunManifest, StageRecord, ARTIFACT_VERSION, MANIFEST_FILE};
pub use store::{read_text, write_atomic};

use crate::dataset::{
    parse_movies, parse_ratings, parse_users, profile_map, write_movies_csv, write_ratings_csv,
    write_users_csv, Catalog, MovieRecord, ProfileMap, RatingTable, UserId,
};
use crate::embedding::EmbeddingModel;
use crate::ensemble::{export_rule_tree, write_rules_csv, EnsembleSelection};
use crate::error::{Error, Result};
use crate::eval::{evaluate, render_report, EvaluationReport};
use crate::graph::HeteroGraph;
use crate::method::{embed_stage, graph_stage, rules_stage, Prepared};
use crate::recommend::{recommend_top_k, write_recommendations_csv, RecommendationList};

pub const STAGE_INGEST: &str = "ingest";
pub const STAGE_RULES: &str = "rules";
pub const STAGE_GRAPH: &str = "graph";
pub const STAGE_EMBED: &str = "embed";
pub const STAGE_RECOMMEND: &str = "recommend";
pub const STAGE_EVALUATE: &str = "evaluate";

const RATINGS_TABLE: &str = "tables/ratings.csv";
const MOVIES_TABLE: &str = "tables/movies.csv";
const USERS_TABLE: &str = "tables/users.csv";

/// Tables loaded back from the ingest stage.
#[derive(Debug, Clone)]
pub struct Tables {
    pub ratings: RatingTable,
    pub catalog: Catalog,
    pub profiles: Option<ProfileMap>,
}

#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    hash: String,
    /// Relative data paths resolve against this directory.
    base_dir: PathBuf,
    out: PathBuf,
    manifest: RunManifest,
}

impl Pipeline {
    pub fn new(
        config: PipelineConfig,
        base_dir: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Result<Self> {
        config.validate()?;
        let out = out.into();
        let hash = config.hash();
        let mut manifest = RunManifest::load(&out)?
            .unwrap_or_else(|| RunManifest::new(hash.clone(), config.seed, config.deterministic));
        manifest.artifact_version = ARTIFACT_VERSION.to_owned();
        manifest.config_hash = hash.clone();
        manifest.seed = config.seed;
        manifest.deterministic = config.deterministic;
        Ok(Pipeline {
            config,
            hash,
            base_dir: base_dir.into(),
            out,
            manifest,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    /// Directory holding one target's artifacts for the current config.
    pub fn target_dir(&self, target: UserId) -> PathBuf {
        self.out.join(self.target_rel(target))
    }

    fn target_rel(&self, target: UserId) -> String {
        format!("targets/{target}-{}", &self.hash[..8])
    }

    fn rel(&self, target: UserId, file: &str) -> String {
        format!("{}/{file}", self.target_rel(target))
    }

    /// Parses the configured input files and stores them as normalized CSV tables.
    pub fn ingest(&mut self) -> Result<()> {
        let start = Instant::now();
        let data = self
            .config
            .data
            .clone()
            .ok_or_else(|| Error::Config("no [data] section with input paths".into()))?;
        let ratings_path = self.base_dir.join(&data.ratings);
        let movies_path = self.base_dir.join(&data.movies);
        let ratings = parse_ratings(&ratings_path)?;
        let movies = parse_movies(&movies_path)?;
        let mut outputs = vec![RATINGS_TABLE.to_owned(), MOVIES_TABLE.to_owned()];

        let mut fingerprints = vec![
            ("ratings".to_owned(), fingerprint(&ratings_path)?),
            ("movies".to_owned(), fingerprint(&movies_path)?),
        ];
        let mut buf = Vec::new();
        write_ratings_csv(&ratings, &mut buf)?;
        write_atomic(&self.out.join(RATINGS_TABLE), &buf)?;
        buf.clear();
        write_movies_csv(&movies, &mut buf)?;
        write_atomic(&self.out.join(MOVIES_TABLE), &buf)?;

        let users_table = self.out.join(USERS_TABLE);
        match &data.users {
            Some(users) => {
                let users_path = self.base_dir.join(users);
                let profiles = parse_users(&users_path)?;
                fingerprints.push(("users".to_owned(), fingerprint(&users_path)?));
                buf.clear();
                write_users_csv(&profiles, &mut buf)?;
                write_atomic(&users_table, &buf)?;
                outputs.push(USERS_TABLE.to_owned());
            }
            None => {
                log::warn!("no user demographics configured; profile classes span all users");
                if users_table.exists() {
                    std::fs::remove_file(&users_table).map_err(|e| Error::io(&users_table, e))?;
                }
            }
        }
        log::info!(
            "ingested {} ratings by {} users over {} movies",
            ratings.len(),
            ratings.user_count(),
            movies.len()
        );
        self.manifest.dataset_fingerprints = fingerprints.into_iter().collect();
        self.finish(STAGE_INGEST, None, start, outputs)
    }

    /// Reads the tables written by [`Pipeline::ingest`].
    pub fn load_tables(&self) -> Result<Tables> {
        self.require(
            STAGE_INGEST,
            None,
            &[RATINGS_TABLE.to_owned(), MOVIES_TABLE.to_owned()],
        )?;
        let ratings = parse_ratings(self.out.join(RATINGS_TABLE))?;
        let movies: Vec<MovieRecord> = parse_movies(self.out.join(MOVIES_TABLE))?;
        let catalog = Catalog::new(movies)?;
        let users = self.out.join(USERS_TABLE);
        let profiles = if users.exists() {
            Some(profile_map(parse_users(&users)?))
        } else {
            None
        };
        Ok(Tables {
            ratings,
            catalog,
            profiles,
        })
    }

    /// Enumerates and ranks the target's fuzzy rules.
    pub fn rules(&mut self, target: UserId) -> Result<EnsembleSelection> {
        let tables = self.load_tables()?;
        let start = Instant::now();
        let method = self.config.method();
        let data = Prepared::new(
            &tables.ratings,
            tables.profiles.as_ref(),
            &tables.catalog,
            method.top_n_popular,
        )?;
        let (rules, selection) = rules_stage(target, &data, &method)?;

        let mut csv = Vec::new();
        write_rules_csv(&rules, &mut csv).map_err(|e| Error::io(self.target_dir(target), e))?;
        let profile = tables.profiles.as_ref().and_then(|p| p.get(&target));
        let dot = export_rule_tree(&rules, &selection, profile);
        let json = serde_json::to_string_pretty(&selection).expect("selection serializes");

        let outputs = ["rules.csv", "tree.dot", "ensemble.json"].map(|f| self.rel(target, f));
        write_atomic(&self.out.join(&outputs[0]), &csv)?;
        write_atomic(&self.out.join(&outputs[1]), dot.as_bytes())?;
        write_atomic(&self.out.join(&outputs[2]), json.as_bytes())?;
        self.finish(STAGE_RULES, Some(target), start, outputs.to_vec())?;
        Ok(selection)
    }

    /// Builds the target's knowledge graph from its stored ensemble.
    pub fn graph(&mut self, target: UserId) -> Result<HeteroGraph> {
        let ensemble = self.rel(target, "ensemble.json");
        self.require(STAGE_RULES, Some(target), std::slice::from_ref(&ensemble))?;
        let tables = self.load_tables()?;
        let start = Instant::now();
        let path = self.out.join(&ensemble);
        let selection: EnsembleSelection = serde_json::from_str(&read_text(&path)?)
            .map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
        let method = self.config.method();
        let data = Prepared::new(
            &tables.ratings,
            tables.profiles.as_ref(),
            &tables.catalog,
            method.top_n_popular,
        )?;
        let graph = graph_stage(target, &selection, &data, &method)?;
        log::info!(
            "user {target}: graph with {} nodes and {} edges",
            graph.node_count(),
            graph.edge_count()
        );

        let outputs = ["graph.nodes.csv", "graph.edges"].map(|f| self.rel(target, f));
        let mut buf = Vec::new();
        let dir = self.target_dir(target);
        graph
            .write_node_table(&mut buf)
            .map_err(|e| Error::io(&dir, e))?;
        write_atomic(&self.out.join(&outputs[0]), &buf)?;
        buf.clear();
        graph
            .write_edge_list(&mut buf)
            .map_err(|e| Error::io(&dir, e))?;
        write_atomic(&self.out.join(&outputs[1]), &buf)?;
        self.finish(STAGE_GRAPH, Some(target), start, outputs.to_vec())?;
        Ok(graph)
    }

    fn load_graph(&self, target: UserId) -> Result<HeteroGraph> {
        let nodes = read_text(&self.out.join(self.rel(target, "graph.nodes.csv")))?;
        let edges = read_text(&self.out.join(self.rel(target, "graph.edges")))?;
        HeteroGraph::read(target, &nodes, &edges)
    }

    /// Generates walks over the stored graph and trains the embedding.
    pub fn embed(&mut self, target: UserId) -> Result<EmbeddingModel> {
        let inputs = ["graph.nodes.csv", "graph.edges"].map(|f| self.rel(target, f));
        self.require(STAGE_GRAPH, Some(target), &inputs)?;
        let start = Instant::now();
        let graph = self.load_graph(target)?;
        let (corpus, model) = self.with_pool(|| embed_stage(&graph, &self.config.method()))?;

        let outputs = ["walks.txt", "model.txt"].map(|f| self.rel(target, f));
        let dir = self.target_dir(target);
        let mut buf = Vec::new();
        corpus.write(&mut buf).map_err(|e| Error::io(&dir, e))?;
        write_atomic(&self.out.join(&outputs[0]), &buf)?;
        buf.clear();
        model.write_text(&mut buf).map_err(|e| Error::io(&dir, e))?;
        write_atomic(&self.out.join(&outputs[1]), &buf)?;
        self.finish(STAGE_EMBED, Some(target), start, outputs.to_vec())?;
        Ok(model)
    }

    /// Ranks the target's unrated candidate movies with the stored embedding.
    pub fn recommend(&mut self, target: UserId, k: usize) -> Result<RecommendationList> {
        let model_rel = self.rel(target, "model.txt");
        self.require(STAGE_EMBED, Some(target), std::slice::from_ref(&model_rel))?;
        let tables = self.load_tables()?;
        let start = Instant::now();
        let graph = self.load_graph(target)?;
        let model = EmbeddingModel::read_text(&read_text(&self.out.join(&model_rel))?)?;
        let list = self.with_pool(|| {
            recommend_top_k(
                target,
                k,
                &graph,
                &model,
                &tables.ratings,
                self.config.aggregate,
            )
        })?;

        let rel = self.rel(target, "recommendations.csv");
        let mut buf = Vec::new();
        write_recommendations_csv(std::slice::from_ref(&list), &mut buf)
            .map_err(|e| Error::io(self.target_dir(target), e))?;
        write_atomic(&self.out.join(&rel), &buf)?;
        self.finish(STAGE_RECOMMEND, Some(target), start, vec![rel])?;
        Ok(list)
    }

    /// Runs the full evaluation protocol and writes the metric tables.
    pub fn evaluate(&mut self) -> Result<EvaluationReport> {
        let tables = self.load_tables()?;
        let start = Instant::now();
        let report = self.with_pool(|| {
            evaluate(
                &tables.ratings,
                tables.profiles.as_ref(),
                &tables.catalog,
                &self.config.method(),
                &self.config.eval(),
            )
        })?;

        let mut outputs = Vec::new();
        let mut files = render_report(&report);
        files.push((
            "report.json".to_owned(),
            serde_json::to_string_pretty(&report).expect("report serializes"),
        ));
        for (name, contents) in files {
            let rel = format!("evaluation/{name}");
            write_atomic(&self.out.join(&rel), contents.as_bytes())?;
            outputs.push(rel);
        }
        self.finish(STAGE_EVALUATE, None, start, outputs)?;
        Ok(report)
    }

    /// Runs `f` on one thread in deterministic mode, otherwise on the global pool.
    fn with_pool<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        if !self.config.deterministic {
            return f();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(f)
    }

    fn require(&self, stage: &str, target: Option<UserId>, files: &[String]) -> Result<()> {
        let recorded = self.manifest.stages.values().any(|s| {
            s.stage == stage
                && s.target == target
                && (target.is_none() || s.config_hash == self.hash)
        });
        let missing = files.iter().find(|f| !self.out.join(f).is_file());
        let what = match target {
            Some(t) => format!("stage {stage} for user {t}"),
            None => format!("stage {stage}"),
        };
        if !recorded {
            return Err(Error::StageOrder(format!(
                "{what} has not run in {} with this configuration",
                self.out.display()
            )));
        }
        if let Some(f) = missing {
            return Err(Error::StageOrder(format!("{what} output {f} is missing")));
        }
        Ok(())
    }

    fn finish(
        &mut self,
        stage: &str,
        target: Option<UserId>,
        start: Instant,
        outputs: Vec<String>,
    ) -> Result<()> {
        let wall_clock_ms = start.elapsed().as_millis() as u64;
        log::info!("{stage} finished in {wall_clock_ms} ms");
        self.manifest.record(StageRecord {
            stage: stage.to_owned(),
            target,
            config_hash: self.hash.clone(),
            wall_clock_ms,
            outputs,
        });
        self.manifest.save(&self.out)
    }
}
