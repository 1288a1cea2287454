//! Undirected adjacency structure and the heterogeneous movie graph.

mod adjacency;
mod hetero;

pub use adjacency::Adjacency;
pub use hetero::{
    apply_link_rules, build_hetero_graph, build_subgraph_nodes, link_rule, GraphInputs,
    GraphOptions, HeteroGraph, KGNode, NodeKey, NodeType, SubgraphId,
};
