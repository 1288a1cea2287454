//! Movie recommendation from ensemble user classes and heterogeneous graph
//! embeddings.
//!
//! The pipeline runs in stages: [`dataset`] ingests MovieLens tables,
//! [`ensemble`] builds and scores the user classes and picks the three best
//! fuzzy rules, [`graph`] turns the selected classes into a typed movie graph,
//! [`embedding`] trains node2vec vectors over it, and [`recommend`] ranks
//! candidate movies against the user's triple vector. [`eval`] holds the
//! metrics and the train/test protocol, and [`pipeline`] wires the stages to
//! files on disk.

pub mod dataset;
pub mod embedding;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod graph;
pub mod method;
pub mod pipeline;
pub mod recommend;
pub mod rng;

pub use error::{Error, Result};
