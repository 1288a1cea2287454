use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Adjacency;
use crate::dataset::{Catalog, GenreMask, InterestProfile, MovieId, PopularityTable, UserId};
use crate::ensemble::EnsembleSelection;
use crate::error::{Error, Result};

/// Role a movie plays inside a sub-graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    /// Liked by the sub-graph's users.
    Sf,
    /// Liked, and shares a genre with the target's liked movies.
    Sfs,
    /// Liked, and one of the most popular movies.
    Smpf,
    /// Liked, and carries one of the most popular genres.
    Smpsf,
}

/// Which user group a sub-graph's movies come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubgraphId {
    Target,
    S1,
    S2,
    S3,
}

impl NodeType {
    pub const ALL: [NodeType; 4] = [NodeType::Sf, NodeType::Sfs, NodeType::Smpf, NodeType::Smpsf];

    pub fn label(self) -> &'static str {
        match self {
            NodeType::Sf => "SF",
            NodeType::Sfs => "SFS",
            NodeType::Smpf => "SMPF",
            NodeType::Smpsf => "SMPSF",
        }
    }
}

impl SubgraphId {
    pub const ALL: [SubgraphId; 4] = [
        SubgraphId::Target,
        SubgraphId::S1,
        SubgraphId::S2,
        SubgraphId::S3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SubgraphId::Target => "TARGET",
            SubgraphId::S1 => "S1",
            SubgraphId::S2 => "S2",
            SubgraphId::S3 => "S3",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for SubgraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NodeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeType::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::Domain(format!("unknown node type {s:?}")))
    }
}

impl FromStr for SubgraphId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubgraphId::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::Domain(format!("unknown sub-graph {s:?}")))
    }
}

/// Identity of a node before dense ids are assigned. Orders by
/// (sub-graph, type, movie), which is also the id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeKey {
    pub subgraph: SubgraphId,
    pub node_type: NodeType,
    pub movie_id: MovieId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KGNode {
    pub node_id: u32,
    pub movie_id: MovieId,
    pub node_type: NodeType,
    pub subgraph: SubgraphId,
}

impl KGNode {
    pub fn key(&self) -> NodeKey {
        NodeKey {
            subgraph: self.subgraph,
            node_type: self.node_type,
            movie_id: self.movie_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Also link qualifying node pairs inside the same sub-graph.
    pub intra_subgraph_edges: bool,
    /// Keep at most this many movies per sub-graph, preferring movies liked by
    /// more of the sub-graph's users, then globally more popular ones.
    pub max_movies_per_subgraph: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphInputs<'a> {
    pub interests: &'a BTreeMap<UserId, InterestProfile>,
    pub popularity: &'a PopularityTable,
    pub catalog: &'a Catalog,
}

/// Nodes of one sub-graph, sorted by (type, movie).
///
/// Every movie liked by any of `users` yields an SF node; it additionally
/// yields an SFS node when it shares a genre with `target_genres`, an SMPF
/// node when it is a top movie and an SMPSF node when it has a top genre.
pub fn build_subgraph_nodes(
    subgraph: SubgraphId,
    users: &BTreeSet<UserId>,
    target_genres: GenreMask,
    inputs: &GraphInputs<'_>,
    max_movies: Option<usize>,
) -> Vec<NodeKey> {
    let mut support: BTreeMap<MovieId, usize> = BTreeMap::new();
    for u in users {
        if let Some(p) = inputs.interests.get(u) {
            for &m in &p.liked {
                *support.entry(m).or_default() += 1;
            }
        }
    }
    let mut pool: Vec<MovieId> = support.keys().copied().collect();
    if let Some(cap) = max_movies {
        if pool.len() > cap {
            pool.sort_by(|a, b| {
                support[b]
                    .cmp(&support[a])
                    .then(
                        inputs
                            .popularity
                            .selection_count(*b)
                            .cmp(&inputs.popularity.selection_count(*a)),
                    )
                    .then(a.cmp(b))
            });
            pool.truncate(cap);
        }
    }

    let mut keys = Vec::new();
    for m in pool {
        let genres = inputs.catalog.genre_mask(m);
        let mut push = |node_type| {
            keys.push(NodeKey {
                subgraph,
                node_type,
                movie_id: m,
            })
        };
        push(NodeType::Sf);
        if genres & target_genres != 0 {
            push(NodeType::Sfs);
        }
        if inputs.popularity.is_top_movie(m) {
            push(NodeType::Smpf);
        }
        if inputs.popularity.has_top_genre(genres) {
            push(NodeType::Smpsf);
        }
    }
    keys.sort_unstable();
    keys
}

/// Which of the four linking rules, if any, joins two nodes.
///
/// Rule 1 joins SF nodes with the same movie or a shared genre; rules 2-4
/// join an SFS node with an SF, SMPF or SMPSF node sharing a genre. Pairs in
/// the same sub-graph only qualify when `intra` is set.
pub fn link_rule(
    a: &KGNode,
    a_genres: GenreMask,
    b: &KGNode,
    b_genres: GenreMask,
    intra: bool,
) -> Option<u8> {
    if a.node_id == b.node_id || (!intra && a.subgraph == b.subgraph) {
        return None;
    }
    let shared_genre = a_genres & b_genres != 0;
    use NodeType::*;
    match (a.node_type, b.node_type) {
        (Sf, Sf) if a.movie_id == b.movie_id || shared_genre => Some(1),
        (Sf, Sfs) | (Sfs, Sf) if shared_genre => Some(2),
        (Smpf, Sfs) | (Sfs, Smpf) if shared_genre => Some(3),
        (Smpsf, Sfs) | (Sfs, Smpsf) if shared_genre => Some(4),
        _ => None,
    }
}

/// All edges between `nodes` under the four linking rules, as ascending `(low, high)` pairs.
pub fn apply_link_rules(nodes: &[KGNode], catalog: &Catalog, intra: bool) -> Vec<(u32, u32)> {
    let masks: Vec<GenreMask> = nodes
        .iter()
        .map(|n| catalog.genre_mask(n.movie_id))
        .collect();
    let of_type = |t: NodeType| -> Vec<usize> {
        (0..nodes.len())
            .filter(|&i| nodes[i].node_type == t)
            .collect()
    };
    let sf = of_type(NodeType::Sf);
    let sfs = of_type(NodeType::Sfs);
    let others: Vec<usize> = (0..nodes.len())
        .filter(|&i| nodes[i].node_type != NodeType::Sfs)
        .collect();

    let mut edges = Vec::new();
    let mut consider = |i: usize, j: usize| {
        if link_rule(&nodes[i], masks[i], &nodes[j], masks[j], intra).is_some() {
            let (a, b) = (nodes[i].node_id, nodes[j].node_id);
            edges.push((a.min(b), a.max(b)));
        }
    };
    for (x, &i) in sf.iter().enumerate() {
        for &j in &sf[x + 1..] {
            consider(i, j);
        }
    }
    for &i in &sfs {
        for &j in &others {
            consider(i, j);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// The four-sub-graph movie graph for one target user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeteroGraph {
    pub target: UserId,
    nodes: Vec<KGNode>,
    adjacency: Adjacency,
    lookup: HashMap<NodeKey, u32>,
}

impl HeteroGraph {
    /// Assembles a graph from stored parts, checking id density, key
    /// uniqueness and the edge type whitelist.
    pub fn from_parts(target: UserId, nodes: Vec<KGNode>, adjacency: Adjacency) -> Result<Self> {
        if adjacency.node_count() != nodes.len() {
            return Err(Error::Build(format!(
                "{} nodes but adjacency over {}",
                nodes.len(),
                adjacency.node_count()
            )));
        }
        let mut lookup = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if n.node_id as usize != i {
                return Err(Error::Build(format!(
                    "node id {} at position {i}",
                    n.node_id
                )));
            }
            if lookup.insert(n.key(), n.node_id).is_some() {
                return Err(Error::Build(format!("duplicate node {:?}", n.key())));
            }
        }
        for (a, b) in adjacency.edges() {
            let pair = (nodes[a as usize].node_type, nodes[b as usize].node_type);
            if !edge_type_allowed(pair.0, pair.1) {
                return Err(Error::Build(format!("edge ({a},{b}) joins {pair:?}")));
            }
        }
        Ok(HeteroGraph {
            target,
            nodes,
            adjacency,
            lookup,
        })
    }

    pub fn nodes(&self) -> &[KGNode] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &KGNode {
        &self.nodes[id as usize]
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.edge_count()
    }

    pub fn lookup(&self, movie: MovieId, node_type: NodeType, subgraph: SubgraphId) -> Option<u32> {
        self.lookup
            .get(&NodeKey {
                subgraph,
                node_type,
                movie_id: movie,
            })
            .copied()
    }

    /// Writes the `node_id,movie_id,type,subgraph` table.
    pub fn write_node_table(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "node_id,movie_id,type,subgraph")?;
        for n in &self.nodes {
            writeln!(
                out,
                "{},{},{},{}",
                n.node_id, n.movie_id, n.node_type, n.subgraph
            )?;
        }
        Ok(())
    }

    pub fn write_edge_list(&self, out: impl Write) -> std::io::Result<()> {
        self.adjacency.write_edge_list(out)
    }

    pub fn read(target: UserId, node_table: &str, edge_list: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        for (i, line) in node_table.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse("<node table>", i + 1, "expected 4 fields"));
            }
            let num = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| Error::parse("<node table>", i + 1, format!("invalid id {s:?}")))
            };
            nodes.push(KGNode {
                node_id: num(f[0])?,
                movie_id: num(f[1])?,
                node_type: f[2].parse()?,
                subgraph: f[3].parse()?,
            });
        }
        let adjacency = Adjacency::read_edge_list(nodes.len(), edge_list)?;
        Self::from_parts(target, nodes, adjacency)
    }
}

fn edge_type_allowed(a: NodeType, b: NodeType) -> bool {
    use NodeType::*;
    matches!(
        (a, b),
        (Sf, Sf) | (Sf, Sfs) | (Sfs, Sf) | (Smpf, Sfs) | (Sfs, Smpf) | (Smpsf, Sfs) | (Sfs, Smpsf)
    )
}

/// Builds the target sub-graph and one sub-graph per selected class, then links them.
pub fn build_hetero_graph(
    target: UserId,
    selection: &EnsembleSelection,
    inputs: &GraphInputs<'_>,
    options: &GraphOptions,
) -> Result<HeteroGraph> {
    let me = inputs
        .interests
        .get(&target)
        .ok_or_else(|| Error::NotFound(format!("no interest profile for user {target}")))?;
    let target_genres = me
        .liked
        .iter()
        .fold(0, |acc, &m| acc | inputs.catalog.genre_mask(m));

    let mut keys = build_subgraph_nodes(
        SubgraphId::Target,
        &[target].into_iter().collect(),
        target_genres,
        inputs,
        options.max_movies_per_subgraph,
    );
    if keys.is_empty() {
        return Err(Error::Build(format!("user {target} likes no movies")));
    }
    for (rule, subgraph) in
        selection
            .top3
            .iter()
            .zip([SubgraphId::S1, SubgraphId::S2, SubgraphId::S3])
    {
        keys.extend(build_subgraph_nodes(
            subgraph,
            &rule.members,
            target_genres,
            inputs,
            options.max_movies_per_subgraph,
        ));
    }
    keys.sort_unstable();

    let nodes: Vec<KGNode> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| KGNode {
            node_id: i as u32,
            movie_id: k.movie_id,
            node_type: k.node_type,
            subgraph: k.subgraph,
        })
        .collect();
    let edges = apply_link_rules(&nodes, inputs.catalog, options.intra_subgraph_edges);
    let adjacency = Adjacency::from_edges(nodes.len(), edges)?;
    HeteroGraph::from_parts(target, nodes, adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        interest_profiles, popularity_ranking, MovieRecord, RatingRecord, RatingTable,
    };
    use crate::ensemble::{ClassMask, FuzzyRule};

    fn catalog(rows: &[(MovieId, &[&str])]) -> Catalog {
        Catalog::new(rows.iter().map(|&(id, g)| MovieRecord {
            movie_id: id,
            title: String::new(),
            genres: g.iter().map(|s| s.to_string()).collect(),
        }))
        .unwrap()
    }

    fn table(rows: &[(UserId, MovieId, u8)]) -> RatingTable {
        RatingTable::from_records(
            rows.iter()
                .map(|&(u, m, r)| RatingRecord {
                    user_id: u,
                    movie_id: m,
                    rating: r,
                    timestamp: 0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn node(id: u32, movie: MovieId, t: NodeType, s: SubgraphId) -> KGNode {
        KGNode {
            node_id: id,
            movie_id: movie,
            node_type: t,
            subgraph: s,
        }
    }

    fn selection(classes: [&[UserId]; 3]) -> EnsembleSelection {
        EnsembleSelection {
            target: 1,
            top3: classes
                .iter()
                .enumerate()
                .map(|(i, m)| FuzzyRule {
                    row: i + 1,
                    mask: ClassMask::all()[i],
                    members: m.iter().copied().collect(),
                    precision: 0.5,
                })
                .collect(),
            fallback: false,
        }
    }

    #[test]
    fn subgraph_node_types() {
        // Movie 17 is Action; Action is a top genre (top_n = 1) but 17 is not the top movie.
        let c = catalog(&[
            (17, &["Action"]),
            (5, &["Action", "Drama"]),
            (9, &["Comedy"]),
        ]);
        let t = table(&[(1, 17, 4), (2, 5, 4), (3, 5, 4), (4, 9, 4)]);
        let interests = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 1).unwrap();
        assert_eq!(pop.top_movies, vec![5]);
        assert_eq!(pop.top_genres, vec!["Action".to_string()]);
        let inputs = GraphInputs {
            interests: &interests,
            popularity: &pop,
            catalog: &c,
        };
        let target_genres = c.genre_mask(17);
        let keys = build_subgraph_nodes(
            SubgraphId::Target,
            &[1].into(),
            target_genres,
            &inputs,
            None,
        );
        let types: Vec<NodeType> = keys.iter().map(|k| k.node_type).collect();
        assert_eq!(types, vec![NodeType::Sf, NodeType::Sfs, NodeType::Smpsf]);
        assert!(keys.iter().all(|k| k.movie_id == 17));

        let s1 = build_subgraph_nodes(SubgraphId::S1, &[2, 4].into(), target_genres, &inputs, None);
        assert!(s1.contains(&NodeKey {
            subgraph: SubgraphId::S1,
            node_type: NodeType::Smpf,
            movie_id: 5
        }));
        assert!(!s1
            .iter()
            .any(|k| k.movie_id == 9 && k.node_type != NodeType::Sf));
        assert!(
            build_subgraph_nodes(SubgraphId::S2, &[].into(), target_genres, &inputs, None)
                .is_empty()
        );
    }

    #[test]
    fn action_movies_link_across_subgraphs() {
        let c = catalog(&[
            (17, &["Action"]),
            (248, &["Action"]),
            (515, &["Action", "War"]),
        ]);
        let nodes = vec![
            node(0, 17, NodeType::Sf, SubgraphId::Target),
            node(1, 248, NodeType::Sf, SubgraphId::S1),
            node(2, 515, NodeType::Sf, SubgraphId::S2),
        ];
        assert_eq!(
            apply_link_rules(&nodes, &c, false),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }

    #[test]
    fn same_subgraph_and_disallowed_types_do_not_link() {
        let c = catalog(&[(1, &["Action"]), (2, &["Action"])]);
        let same = vec![
            node(0, 1, NodeType::Sf, SubgraphId::S1),
            node(1, 2, NodeType::Sf, SubgraphId::S1),
        ];
        assert!(apply_link_rules(&same, &c, false).is_empty());
        assert_eq!(apply_link_rules(&same, &c, true), vec![(0, 1)]);
        let smpf_sf = vec![
            node(0, 1, NodeType::Smpf, SubgraphId::S1),
            node(1, 2, NodeType::Sf, SubgraphId::S2),
        ];
        assert!(apply_link_rules(&smpf_sf, &c, false).is_empty());
    }

    #[test]
    fn hand_enumerated_toy_graph() {
        // Genres: 1 Action, 2 Action|Drama, 3 Comedy, 4 Drama.
        // User 1 (target) likes {1}; user 2 likes {2, 3}; user 3 likes {4}.
        // Ratings counts make movie 2 the single top movie and Action the top genre (top_n = 1).
        let c = catalog(&[
            (1, &["Action"]),
            (2, &["Action", "Drama"]),
            (3, &["Comedy"]),
            (4, &["Drama"]),
        ]);
        let t = table(&[
            (1, 1, 4),
            (2, 2, 4),
            (2, 3, 4),
            (3, 4, 4),
            (3, 2, 2),
            (3, 1, 1),
        ]);
        let interests = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 1).unwrap();
        assert_eq!(pop.top_movies, vec![2]);
        assert_eq!(pop.top_genres, vec!["Action".to_string()]);
        let inputs = GraphInputs {
            interests: &interests,
            popularity: &pop,
            catalog: &c,
        };
        let sel = selection([&[2], &[3], &[]]);
        let g = build_hetero_graph(1, &sel, &inputs, &GraphOptions::default()).unwrap();

        // target: 1 SF, 1 SFS, 1 SMPSF
        // S1 (user 2): 2 SF, 2 SFS, 2 SMPF, 2 SMPSF, 3 SF
        // S2 (user 3, likes 4 only; threshold floor(7/3)=2 so also likes 2): 2 SF,SFS,SMPF,SMPSF; 4 SF
        let expected: Vec<(MovieId, NodeType, SubgraphId)> = vec![
            (1, NodeType::Sf, SubgraphId::Target),
            (1, NodeType::Sfs, SubgraphId::Target),
            (1, NodeType::Smpsf, SubgraphId::Target),
            (2, NodeType::Sf, SubgraphId::S1),
            (3, NodeType::Sf, SubgraphId::S1),
            (2, NodeType::Sfs, SubgraphId::S1),
            (2, NodeType::Smpf, SubgraphId::S1),
            (2, NodeType::Smpsf, SubgraphId::S1),
            (2, NodeType::Sf, SubgraphId::S2),
            (4, NodeType::Sf, SubgraphId::S2),
            (2, NodeType::Sfs, SubgraphId::S2),
            (2, NodeType::Smpf, SubgraphId::S2),
            (2, NodeType::Smpsf, SubgraphId::S2),
        ];
        let got: Vec<(MovieId, NodeType, SubgraphId)> = g
            .nodes()
            .iter()
            .map(|n| (n.movie_id, n.node_type, n.subgraph))
            .collect();
        assert_eq!(got, expected);

        let edges: Vec<(u32, u32)> = g.adjacency().edges().collect();
        // Hand-derived: rule 1 SF-SF across sub-graphs with shared genre or same movie,
        // rules 2-4 SFS with SF/SMPF/SMPSF across sub-graphs sharing a genre.
        let expected_edges = vec![
            (0, 3),  // T:1 SF - S1:2 SF (Action)
            (0, 8),  // T:1 SF - S2:2 SF (Action)
            (0, 5),  // T:1 SF - S1:2 SFS (rule 2)
            (0, 10), // T:1 SF - S2:2 SFS
            (1, 3),  // T:1 SFS - S1:2 SF
            (1, 6),  // T:1 SFS - S1:2 SMPF
            (1, 7),  // T:1 SFS - S1:2 SMPSF
            (1, 8),
            (1, 11),
            (1, 12),
            (2, 5), // T:1 SMPSF - S1:2 SFS
            (2, 10),
            (3, 8),  // S1:2 SF - S2:2 SF (same movie)
            (3, 9),  // S1:2 SF - S2:4 SF (Drama)
            (3, 10), // S1:2 SF - S2:2 SFS
            (5, 8),
            (5, 9), // S1:2 SFS - S2:4 SF (Drama)
            (5, 11),
            (5, 12),
            (6, 10),
            (7, 10),
        ];
        let mut expected_edges = expected_edges;
        expected_edges.sort_unstable();
        assert_eq!(edges, expected_edges);
        let again = build_hetero_graph(1, &sel, &inputs, &GraphOptions::default()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn target_without_likes_is_build_error() {
        let c = catalog(&[(1, &["Action"])]);
        let t = table(&[(2, 1, 4)]);
        let mut interests = interest_profiles(&t);
        interests.insert(
            1,
            InterestProfile {
                user_id: 1,
                threshold: 3,
                liked: BTreeSet::new(),
                not_liked: BTreeSet::new(),
            },
        );
        let pop = popularity_ranking(&t, &c, 5).unwrap();
        let inputs = GraphInputs {
            interests: &interests,
            popularity: &pop,
            catalog: &c,
        };
        let err = build_hetero_graph(
            1,
            &selection([&[2], &[2], &[2]]),
            &inputs,
            &GraphOptions::default(),
        );
        assert!(matches!(err, Err(Error::Build(_))));
    }

    fn arb_nodes() -> impl proptest::strategy::Strategy<Value = Vec<(MovieId, NodeType, SubgraphId)>>
    {
        use proptest::prelude::*;
        let t = prop::sample::select(NodeType::ALL.to_vec());
        let s = prop::sample::select(SubgraphId::ALL.to_vec());
        prop::collection::btree_set((1u32..=6, t, s), 0..24)
            .prop_map(|set| set.into_iter().collect())
    }

    proptest::proptest! {
        #[test]
        fn link_rules_match_brute_force(raw in arb_nodes(), intra in proptest::bool::ANY) {
            let genre_sets: [&[&str]; 6] = [&["A"], &["A", "B"], &["C"], &["B"], &["D"], &["C", "D"]];
            let c = catalog(&(1..=6).map(|m| (m, genre_sets[m as usize - 1])).collect::<Vec<_>>());
            let nodes: Vec<KGNode> = raw
                .iter()
                .enumerate()
                .map(|(i, &(m, t, s))| node(i as u32, m, t, s))
                .collect();
            let edges = apply_link_rules(&nodes, &c, intra);

            let shares = |a: MovieId, b: MovieId| {
                let ga = c.get(a).unwrap().genres.clone();
                c.get(b).unwrap().genres.iter().any(|g| ga.contains(g))
            };
            let mut oracle = Vec::new();
            for a in &nodes {
                for b in &nodes {
                    if a.node_id >= b.node_id || (!intra && a.subgraph == b.subgraph) {
                        continue;
                    }
                    let types = [a.node_type, b.node_type];
                    let both_sf = types == [NodeType::Sf, NodeType::Sf];
                    let sfs_with_other = types.contains(&NodeType::Sfs)
                        && types.iter().filter(|&&t| t == NodeType::Sfs).count() == 1;
                    let linked = (both_sf && (a.movie_id == b.movie_id || shares(a.movie_id, b.movie_id)))
                        || (sfs_with_other && shares(a.movie_id, b.movie_id));
                    if linked {
                        oracle.push((a.node_id, b.node_id));
                    }
                }
            }
            proptest::prop_assert_eq!(&edges, &oracle);
            for &(a, b) in &edges {
                proptest::prop_assert!(edge_type_allowed(nodes[a as usize].node_type, nodes[b as usize].node_type));
                if !intra {
                    proptest::prop_assert_ne!(nodes[a as usize].subgraph, nodes[b as usize].subgraph);
                }
            }
        }
    }

    #[test]
    fn node_table_round_trip() {
        let c = catalog(&[(1, &["Action"]), (2, &["Action"])]);
        let t = table(&[(1, 1, 4), (2, 2, 4), (2, 1, 4)]);
        let interests = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 5).unwrap();
        let inputs = GraphInputs {
            interests: &interests,
            popularity: &pop,
            catalog: &c,
        };
        let g = build_hetero_graph(
            1,
            &selection([&[2], &[2], &[2]]),
            &inputs,
            &GraphOptions::default(),
        )
        .unwrap();
        let (mut nt, mut el) = (Vec::new(), Vec::new());
        g.write_node_table(&mut nt).unwrap();
        g.write_edge_list(&mut el).unwrap();
        let back = HeteroGraph::read(
            1,
            std::str::from_utf8(&nt).unwrap(),
            std::str::from_utf8(&el).unwrap(),
        )
        .unwrap();
        assert_eq!(back, g);
    }
}
