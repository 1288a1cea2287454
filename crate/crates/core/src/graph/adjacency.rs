use std::io::Write;

use crate::error::{Error, Result};

/// Simple undirected graph over dense node ids, stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    /// Largest graph [`Adjacency::dense_matrix`] will materialize.
    pub const DENSE_LIMIT: usize = 2_000;

    /// Builds from undirected edges. Duplicates collapse; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b {
                return Err(Error::Build(format!("self-loop on node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::Build(format!("edge ({a},{b}) outside {n} nodes")));
            }
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Adjacency { neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: u32) -> &[u32] {
        &self.neighbors[node as usize]
    }

    pub fn degree(&self, node: u32) -> usize {
        self.neighbors[node as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors
            .get(a as usize)
            .is_some_and(|l| l.binary_search(&b).is_ok())
    }

    /// Each undirected edge once, as `(low, high)` in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, list)| {
            let i = i as u32;
            list.iter().filter(move |&&j| j > i).map(move |&j| (i, j))
        })
    }

    /// Dense symmetric 0/1 matrix with a zero diagonal.
    pub fn dense_matrix(&self) -> Result<Vec<Vec<u8>>> {
        let n = self.node_count();
        if n > Self::DENSE_LIMIT {
            return Err(Error::Capacity {
                nodes: n,
                limit: Self::DENSE_LIMIT,
            });
        }
        let mut m = vec![vec![0u8; n]; n];
        for (a, b) in self.edges() {
            m[a as usize][b as usize] = 1;
            m[b as usize][a as usize] = 1;
        }
        Ok(m)
    }

    /// `node_id<TAB>node_id` per line, low id first.
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        for (a, b) in self.edges() {
            writeln!(out, "{a}\t{b}")?;
        }
        Ok(())
    }

    pub fn read_edge_list(n: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(
                    "<edge list>",
                    i + 1,
                    "expected two tab-separated ids",
                ));
            };
            let parse = |s: &str| {
                s.trim().parse::<u32>().map_err(|_| {
                    Error::parse("<edge list>", i + 1, format!("invalid node id {s:?}"))
                })
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Self::from_edges(n, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let g = Adjacency::from_edges(3, [(1, 0), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edge_count(), 2);
        let m = g.dense_matrix().unwrap();
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], 0);
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, m[j][i]);
            }
        }
        assert_eq!(m[0], vec![0, 1, 0]);
    }

    #[test]
    fn dense_capacity() {
        let g = Adjacency::from_edges(3_000, [(0, 1)]).unwrap();
        assert!(matches!(
            g.dense_matrix(),
            Err(Error::Capacity {
                nodes: 3_000,
                limit: 2_000
            })
        ));
    }

    #[test]
    fn rejects_self_loops() {
        assert!(Adjacency::from_edges(2, [(1, 1)]).is_err());
        assert!(Adjacency::from_edges(2, [(1, 2)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Adjacency::from_edges(5, [(0, 4), (3, 1), (2, 4)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "0\t4\n1\t3\n2\t4\n"
        );
        let back = Adjacency::read_edge_list(5, std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
