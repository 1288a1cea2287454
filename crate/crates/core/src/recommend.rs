//! User triple vectors and cosine top-k recommendation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{MovieId, RatingTable, UserId};
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeType, SubgraphId};

/// One of the three user vectors, named by the node type it averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UtvComponent {
    SfSfs,
    SmpfSfs,
    SmpsfSfs,
}

impl UtvComponent {
    /// Also the tie-break priority, first wins.
    pub const ALL: [UtvComponent; 3] = [
        UtvComponent::SfSfs,
        UtvComponent::SmpfSfs,
        UtvComponent::SmpsfSfs,
    ];

    pub fn node_type(self) -> NodeType {
        match self {
            UtvComponent::SfSfs => NodeType::Sf,
            UtvComponent::SmpfSfs => NodeType::Smpf,
            UtvComponent::SmpsfSfs => NodeType::Smpsf,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UtvComponent::SfSfs => "SF&SFS",
            UtvComponent::SmpfSfs => "SMPF&SFS",
            UtvComponent::SmpsfSfs => "SMPSF&SFS",
        }
    }
}

impl fmt::Display for UtvComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How component cosines combine into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utv {
    pub user_id: UserId,
    /// Indexed like [`UtvComponent::ALL`].
    pub components: [Option<Vec<f64>>; 3],
}

impl Utv {
    pub fn get(&self, c: UtvComponent) -> Option<&[f64]> {
        self.components[c as usize].as_deref()
    }

    pub fn present(&self) -> impl Iterator<Item = (UtvComponent, &[f64])> {
        UtvComponent::ALL
            .into_iter()
            .filter_map(|c| self.get(c).map(|v| (c, v)))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

/// Averages the target sub-graph's SF, SMPF and SMPSF nodes that touch an SFS node.
pub fn build_utv(target: UserId, graph: &HeteroGraph, model: &EmbeddingModel) -> Result<Utv> {
    if model.node_count() != graph.node_count() {
        return Err(Error::Utv(format!(
            "model has {} rows for a graph of {} nodes",
            model.node_count(),
            graph.node_count()
        )));
    }
    let adj = graph.adjacency();
    let mut components: [Option<Vec<f64>>; 3] = Default::default();
    for c in UtvComponent::ALL {
        let mut sum = vec![0.0; model.dim()];
        let mut count = 0usize;
        for node in graph.nodes() {
            if node.subgraph != SubgraphId::Target || node.node_type != c.node_type() {
                continue;
            }
            let linked = adj
                .neighbors(node.node_id)
                .iter()
                .any(|&x| graph.node(x).node_type == NodeType::Sfs);
            if linked {
                for (s, x) in sum.iter_mut().zip(model.vector(node.node_id)) {
                    *s += x;
                }
                count += 1;
            }
        }
        if count > 0 {
            sum.iter_mut().for_each(|s| *s /= count as f64);
            components[c as usize] = Some(sum);
        }
    }
    if components.iter().all(Option::is_none) {
        return Err(Error::Utv(format!(
            "user {target} has no target node linked to an SFS node"
        )));
    }
    Ok(Utv {
        user_id: target,
        components,
    })
}

/// Every movie in the S1-S3 sub-graphs with its highest-degree node (lowest id on ties).
pub fn representative_nodes(graph: &HeteroGraph) -> BTreeMap<MovieId, u32> {
    let adj = graph.adjacency();
    let mut reps: BTreeMap<MovieId, u32> = BTreeMap::new();
    for node in graph.nodes() {
        if node.subgraph == SubgraphId::Target {
            continue;
        }
        reps.entry(node.movie_id)
            .and_modify(|best| {
                if adj.degree(node.node_id) > adj.degree(*best) {
                    *best = node.node_id;
                }
            })
            .or_insert(node.node_id);
    }
    reps
}

/// Representative nodes of the movies the target has not rated.
pub fn candidate_set(
    target: UserId,
    graph: &HeteroGraph,
    ratings: &RatingTable,
) -> BTreeMap<MovieId, u32> {
    let mut reps = representative_nodes(graph);
    reps.retain(|&m, _| ratings.rating(target, m).is_none());
    reps
}

pub fn score_candidate(
    utv: &Utv,
    candidate: &[f64],
    aggregate: Aggregate,
) -> Result<(f64, UtvComponent)> {
    let mut best: Option<(f64, UtvComponent)> = None;
    let (mut sum, mut count) = (0.0, 0usize);
    for (c, v) in utv.present() {
        let s = cosine(v, candidate)?;
        sum += s;
        count += 1;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, c));
        }
    }
    let (max, component) =
        best.ok_or_else(|| Error::Utv("user triple vector has no components".into()))?;
    let score = match aggregate {
        Aggregate::Max => max,
        Aggregate::Mean => sum / count as f64,
    };
    Ok((score, component))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub movie_id: MovieId,
    pub score: f64,
    pub best_component: UtvComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user_id: UserId,
    pub k: usize,
    pub items: Vec<Recommendation>,
}

/// Scores every candidate and returns all of them, best first.
pub fn rank_candidates(
    utv: &Utv,
    candidates: &BTreeMap<MovieId, u32>,
    model: &EmbeddingModel,
    aggregate: Aggregate,
) -> Result<Vec<Recommendation>> {
    let entries: Vec<(MovieId, u32)> = candidates.iter().map(|(&m, &n)| (m, n)).collect();
    let mut scored = entries
        .par_iter()
        .map(|&(movie_id, node)| {
            let (score, best_component) = score_candidate(utv, model.vector(node), aggregate)?;
            Ok(Recommendation {
                movie_id,
                score,
                best_component,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.movie_id.cmp(&b.movie_id))
    });
    Ok(scored)
}

pub fn recommend_top_k(
    target: UserId,
    k: usize,
    graph: &HeteroGraph,
    model: &EmbeddingModel,
    ratings: &RatingTable,
    aggregate: Aggregate,
) -> Result<RecommendationList> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let utv = build_utv(target, graph, model)?;
    let mut items = rank_candidates(
        &utv,
        &candidate_set(target, graph, ratings),
        model,
        aggregate,
    )?;
    items.truncate(k);
    Ok(RecommendationList {
        user_id: target,
        k,
        items,
    })
}

/// Writes `user_id,rank,movie_id,score,best_component`, ranks from 1.
pub fn write_recommendations_csv(
    lists: &[RecommendationList],
    mut out: impl Write,
) -> std::io::Result<()> {
    writeln!(out, "user_id,rank,movie_id,score,best_component")?;
    for list in lists {
        for (i, r) in list.items.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{:.6},{}",
                list.user_id,
                i + 1,
                r.movie_id,
                r.score,
                r.best_component
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RatingRecord;
    use crate::graph::{Adjacency, KGNode};
    use proptest::prelude::*;

    fn node(id: u32, movie: MovieId, t: NodeType, s: SubgraphId) -> KGNode {
        KGNode {
            node_id: id,
            movie_id: movie,
            node_type: t,
            subgraph: s,
        }
    }

    /// Target: 0 SF(1), 1 SFS(1), 2 SMPF(1) [no SFS edge], 3 SMPSF(1).
    /// S1: 4 SF(10), 5 SFS(10), 6 SMPF(10). S2: 7 SF(20), 8 SF(1).
    fn toy() -> HeteroGraph {
        let nodes = vec![
            node(0, 1, NodeType::Sf, SubgraphId::Target),
            node(1, 1, NodeType::Sfs, SubgraphId::Target),
            node(2, 1, NodeType::Smpf, SubgraphId::Target),
            node(3, 1, NodeType::Smpsf, SubgraphId::Target),
            node(4, 10, NodeType::Sf, SubgraphId::S1),
            node(5, 10, NodeType::Sfs, SubgraphId::S1),
            node(6, 10, NodeType::Smpf, SubgraphId::S1),
            node(7, 20, NodeType::Sf, SubgraphId::S2),
            node(8, 1, NodeType::Sf, SubgraphId::S2),
        ];
        let adj = Adjacency::from_edges(
            9,
            [
                (0, 5),
                (3, 5),
                (4, 7),
                (1, 4),
                (1, 6),
                (5, 7),
                (0, 8),
                (4, 8),
            ],
        )
        .unwrap();
        HeteroGraph::from_parts(1, nodes, adj).unwrap()
    }

    fn model(rows: &[[f64; 2]]) -> EmbeddingModel {
        EmbeddingModel::from_rows(
            rows.len(),
            2,
            rows.iter().flatten().copied().collect(),
            None,
        )
        .unwrap()
    }

    fn toy_model() -> EmbeddingModel {
        model(&[
            [1.0, 0.0],
            [0.5, 0.5],
            [0.0, 1.0],
            [0.0, 2.0],
            [1.0, 1.0],
            [3.0, 1.0],
            [1.0, 3.0],
            [-1.0, 0.2],
            [2.0, 0.1],
        ])
    }

    fn ratings() -> RatingTable {
        RatingTable::from_records(vec![RatingRecord {
            user_id: 1,
            movie_id: 1,
            rating: 5,
            timestamp: 0,
        }])
        .unwrap()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(
            (cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs()
                < 1e-12
        );
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn utv_components() {
        let g = toy();
        let utv = build_utv(1, &g, &toy_model()).unwrap();
        assert_eq!(utv.get(UtvComponent::SfSfs), Some(&[1.0, 0.0][..]));
        assert_eq!(utv.get(UtvComponent::SmpfSfs), None);
        assert_eq!(utv.get(UtvComponent::SmpsfSfs), Some(&[0.0, 2.0][..]));

        // Two qualifying SF nodes average.
        let mut nodes2: Vec<KGNode> = g.nodes().to_vec();
        nodes2[2].node_type = NodeType::Sf;
        nodes2[2].movie_id = 2;
        nodes2.swap(1, 2);
        nodes2[1].node_id = 1;
        nodes2[2].node_id = 2;
        // node 1 is now SF(2) and node 2 is SFS(1); link node 1 to the S1 SFS node.
        let adj = Adjacency::from_edges(9, [(0, 5), (1, 5), (3, 5)]).unwrap();
        let g2 = HeteroGraph::from_parts(1, nodes2, adj).unwrap();
        let utv = build_utv(1, &g2, &toy_model()).unwrap();
        assert_eq!(utv.get(UtvComponent::SfSfs), Some(&[0.75, 0.25][..]));
    }

    #[test]
    fn utv_needs_a_component() {
        let nodes = vec![
            node(0, 1, NodeType::Sf, SubgraphId::Target),
            node(1, 2, NodeType::Sf, SubgraphId::S1),
        ];
        let g =
            HeteroGraph::from_parts(1, nodes, Adjacency::from_edges(2, [(0, 1)]).unwrap()).unwrap();
        assert!(matches!(
            build_utv(1, &g, &model(&[[1.0, 0.0], [0.0, 1.0]])),
            Err(Error::Utv(_))
        ));
    }

    #[test]
    fn candidates_and_representatives() {
        let g = toy();
        let c = candidate_set(1, &g, &ratings());
        // Movie 1 is rated; movie 10 has SF deg 3, SFS deg 3, SMPF deg 1 -> node 4; movie 20 -> node 7.
        assert_eq!(c, BTreeMap::from([(10, 4), (20, 7)]));
        assert_eq!(representative_nodes(&g)[&1], 8);
    }

    #[test]
    fn representative_prefers_higher_degree() {
        // Movie 5 as SF (degree 3) and SMPF (degree 5).
        let mut nodes = vec![
            node(0, 5, NodeType::Sf, SubgraphId::S1),
            node(1, 5, NodeType::Smpf, SubgraphId::S1),
        ];
        for i in 2..7 {
            nodes.push(node(i, 100 + i, NodeType::Sfs, SubgraphId::Target));
        }
        let adj = Adjacency::from_edges(
            7,
            [
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (1, 5),
                (1, 6),
            ],
        )
        .unwrap();
        let g = HeteroGraph::from_parts(9, nodes, adj).unwrap();
        assert_eq!(representative_nodes(&g)[&5], 1);
    }

    #[test]
    fn score_picks_max_component() {
        let utv = Utv {
            user_id: 1,
            components: [
                Some(vec![1.0, 0.0]),
                Some(vec![0.0, 1.0]),
                Some(vec![1.0, 1.0]),
            ],
        };
        // cosines: 0.6, 0.8, 0.98995
        let (s, c) = score_candidate(&utv, &[3.0, 4.0], Aggregate::Max).unwrap();
        assert!((s - 7.0 / (5.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(c, UtvComponent::SmpsfSfs);
        let (m, _) = score_candidate(&utv, &[3.0, 4.0], Aggregate::Mean).unwrap();
        assert!((m - (0.6 + 0.8 + 7.0 / (5.0 * 2f64.sqrt())) / 3.0).abs() < 1e-12);
        // Equal cosines fall to the first component.
        let tie = Utv {
            user_id: 1,
            components: [None, Some(vec![1.0, 0.0]), Some(vec![2.0, 0.0])],
        };
        assert_eq!(
            score_candidate(&tie, &[1.0, 0.0], Aggregate::Max).unwrap(),
            (1.0, UtvComponent::SmpfSfs)
        );
    }

    #[test]
    fn toy_ranking_matches_brute_force() {
        let g = toy();
        let m = toy_model();
        let list = recommend_top_k(1, 10, &g, &m, &ratings(), Aggregate::Max).unwrap();
        // UTV: SF&SFS = (1,0), SMPSF&SFS = (0,2).
        // movie 10 via node 4 (1,1): max(0.7071, 0.7071) -> SF&SFS by priority.
        // movie 20 via node 7 (-1,0.2): max(-0.9806, 0.1961) -> SMPSF&SFS.
        let got: Vec<(MovieId, UtvComponent)> = list
            .items
            .iter()
            .map(|r| (r.movie_id, r.best_component))
            .collect();
        assert_eq!(
            got,
            vec![(10, UtvComponent::SfSfs), (20, UtvComponent::SmpsfSfs)]
        );
        assert!((list.items[0].score - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((list.items[1].score - 0.2 / 1.04f64.sqrt()).abs() < 1e-12);

        let one = recommend_top_k(1, 1, &g, &m, &ratings(), Aggregate::Max).unwrap();
        assert_eq!(one.items[..], list.items[..1]);
        let mut buf = Vec::new();
        write_recommendations_csv(&[one], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "user_id,rank,movie_id,score,best_component\n1,1,10,0.707107,SF&SFS\n"
        );
    }

    #[test]
    fn equal_scores_order_by_movie() {
        let utv = Utv {
            user_id: 1,
            components: [Some(vec![1.0, 0.0]), None, None],
        };
        let m = model(&[[1.0, 1.0], [2.0, 2.0]]);
        let cands = BTreeMap::from([(9, 0), (4, 1)]);
        let ranked = rank_candidates(&utv, &cands, &m, Aggregate::Max).unwrap();
        assert_eq!(
            ranked.iter().map(|r| r.movie_id).collect::<Vec<_>>(),
            vec![4, 9]
        );
    }

    proptest! {
        #[test]
        fn ranking_properties(
            rows in prop::collection::vec(prop::array::uniform2(-5.0f64..5.0), 9),
            factor in 0.01f64..100.0,
            k1 in 1usize..4,
            extra in 0usize..4,
        ) {
            prop_assume!(rows.iter().all(|r| r[0].abs() + r[1].abs() > 1e-3));
            let g = toy();
            let m = model(&rows);
            let rated = ratings();
            let Ok(full) = recommend_top_k(1, 100, &g, &m, &rated, Aggregate::Max) else {
                return Ok(());
            };
            // brute-force oracle: score every candidate directly and sort
            let utv = build_utv(1, &g, &m).unwrap();
            let mut oracle: Vec<(f64, MovieId)> = candidate_set(1, &g, &rated)
                .iter()
                .map(|(&mv, &n)| {
                    let best = utv.present().map(|(_, v)| cosine(v, m.vector(n)).unwrap()).fold(f64::NEG_INFINITY, f64::max);
                    (best, mv)
                })
                .collect();
            oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            prop_assert_eq!(full.items.iter().map(|r| r.movie_id).collect::<Vec<_>>(), oracle.iter().map(|o| o.1).collect::<Vec<_>>());
            for w in full.items.windows(2) {
                prop_assert!(w[0].score >= w[1].score);
            }
            prop_assert!(full.items.iter().all(|r| rated.rating(1, r.movie_id).is_none()));

            let a = recommend_top_k(1, k1, &g, &m, &rated, Aggregate::Max).unwrap();
            let b = recommend_top_k(1, k1 + extra, &g, &m, &rated, Aggregate::Max).unwrap();
            prop_assert_eq!(&a.items[..], &b.items[..a.items.len()]);

            let mut scaled = m.clone();
            scaled.scale(factor);
            let s = recommend_top_k(1, 100, &g, &scaled, &rated, Aggregate::Max).unwrap();
            prop_assert_eq!(
                s.items.iter().map(|r| (r.movie_id, r.best_component)).collect::<Vec<_>>(),
                full.items.iter().map(|r| (r.movie_id, r.best_component)).collect::<Vec<_>>()
            );
        }
    }
}
