use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;

use super::WalkConfig;
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::rng::{rng_for, Rng};

/// Random walks over dense node ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// Occurrences of each node id below `n` across all walks.
    pub fn node_frequencies(&self, n: usize) -> Vec<u64> {
        let mut freq = vec![0u64; n];
        for &v in self.walks.iter().flatten() {
            freq[v as usize] += 1;
        }
        freq
    }

    /// One walk per line, ids separated by single spaces.
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for walk in &self.walks {
            let line: Vec<String> = walk.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read(text: &str) -> Result<Self> {
        let mut walks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let walk = line
                .split_ascii_whitespace()
                .map(|t| {
                    t.parse::<u32>().map_err(|_| {
                        Error::parse("<corpus>", i + 1, format!("invalid node id {t:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            walks.push(walk);
        }
        Ok(WalkCorpus { walks })
    }
}

/// Unnormalized next-step weights over `cur`'s neighbors, in neighbor order.
fn step_weights(adj: &Adjacency, p: f64, q: f64, prev: Option<u32>, cur: u32, out: &mut Vec<f64>) {
    out.clear();
    let neighbors = adj.neighbors(cur);
    let Some(prev) = prev else {
        out.resize(neighbors.len(), 1.0);
        return;
    };
    // Both lists are sorted, so adjacency to prev is a merge.
    let prev_neighbors = adj.neighbors(prev);
    let mut j = 0;
    for &x in neighbors {
        while j < prev_neighbors.len() && prev_neighbors[j] < x {
            j += 1;
        }
        let w = if x == prev {
            1.0 / p
        } else if j < prev_neighbors.len() && prev_neighbors[j] == x {
            1.0
        } else {
            1.0 / q
        };
        out.push(w);
    }
}

/// Next-step probabilities from `cur`, having arrived from `prev`.
pub fn transition_distribution(
    adj: &Adjacency,
    p: f64,
    q: f64,
    prev: Option<u32>,
    cur: u32,
) -> Result<Vec<(u32, f64)>> {
    let neighbors = adj.neighbors(cur);
    if neighbors.is_empty() {
        return Err(Error::NoNeighbors(cur));
    }
    let mut w = Vec::with_capacity(neighbors.len());
    step_weights(adj, p, q, prev, cur, &mut w);
    let total: f64 = w.iter().sum();
    Ok(neighbors
        .iter()
        .zip(w)
        .map(|(&x, w)| (x, w / total))
        .collect())
}

/// Draws the next node, or `None` when `cur` is isolated.
///
/// One uniform draw is scaled by the total weight and located in the running
/// sum. With equal weights this is the same index as flooring the scaled
/// draw, which is the shortcut taken when `p = q = 1`.
pub fn sample_next(
    adj: &Adjacency,
    p: f64,
    q: f64,
    prev: Option<u32>,
    cur: u32,
    rng: &mut Rng,
    scratch: &mut Vec<f64>,
) -> Option<u32> {
    let neighbors = adj.neighbors(cur);
    if neighbors.is_empty() {
        return None;
    }
    let r: f64 = rng.random();
    if prev.is_none() || (p == 1.0 && q == 1.0) {
        let i = ((r * neighbors.len() as f64) as usize).min(neighbors.len() - 1);
        return Some(neighbors[i]);
    }
    step_weights(adj, p, q, prev, cur, scratch);
    let total: f64 = scratch.iter().sum();
    let u = r * total;
    let mut acc = 0.0;
    for (i, &w) in scratch.iter().enumerate() {
        acc += w;
        if u < acc {
            return Some(neighbors[i]);
        }
    }
    neighbors.last().copied()
}

fn walk_from(adj: &Adjacency, config: &WalkConfig, start: u32, mut rng: Rng) -> Vec<u32> {
    let mut walk = Vec::with_capacity(config.walk_length);
    walk.push(start);
    let mut scratch = Vec::new();
    let mut prev = None;
    let mut cur = start;
    while walk.len() < config.walk_length {
        match sample_next(adj, config.p, config.q, prev, cur, &mut rng, &mut scratch) {
            Some(next) => {
                walk.push(next);
                prev = Some(cur);
                cur = next;
            }
            None => break,
        }
    }
    walk
}

/// `walks_per_node` rounds, each starting one walk from every node in id
/// order. Walk `r` from node `v` draws from the stream `(seed, v, r)`.
pub fn generate_walks(adj: &Adjacency, config: &WalkConfig, seed: u64) -> WalkCorpus {
    let n = adj.node_count();
    let walks = (0..config.walks_per_node * n)
        .into_par_iter()
        .map(|i| {
            let (round, node) = (i / n, (i % n) as u32);
            walk_from(
                adj,
                config,
                node,
                rng_for(seed, &[node as u64, round as u64]),
            )
        })
        .collect();
    WalkCorpus { walks }
}

/// Ordered `(u, context)` pairs for every position and every other position
/// within `window` steps in the same walk.
pub fn neighborhood_pairs(corpus: &WalkCorpus, window: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for_each_pair(corpus, window, |u, c| pairs.push((u, c)));
    pairs
}

pub(super) fn for_each_pair(corpus: &WalkCorpus, window: usize, mut f: impl FnMut(u32, u32)) {
    for walk in &corpus.walks {
        for (i, &u) in walk.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(walk.len() - 1);
            for (j, &c) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    f(u, c);
                }
            }
        }
    }
}

pub(super) fn pair_count(corpus: &WalkCorpus, window: usize) -> usize {
    corpus
        .walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| (i + window).min(w.len() - 1) - i.saturating_sub(window))
                .sum::<usize>()
        })
        .sum()
}
