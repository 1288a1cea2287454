use std::collections::BTreeMap;

use crate::dataset::{MovieId, PopularityTable, RatingTable, UserId};

/// A movie and the score a baseline ranked it by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub movie_id: MovieId,
    pub score: f64,
}

fn sort_items(items: &mut [ScoredItem]) {
    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.movie_id.cmp(&b.movie_id))
    });
}

/// Every movie in popularity order, scored by reversed rank so the scores
/// reproduce that order exactly.
pub fn popularity_scores(popularity: &PopularityTable) -> Vec<ScoredItem> {
    let n = popularity.movie_rank.len();
    popularity
        .movie_rank
        .iter()
        .enumerate()
        .map(|(i, r)| ScoredItem {
            movie_id: r.movie_id,
            score: (n - i) as f64,
        })
        .collect()
}

/// The `k` most selected movies the target has not rated.
pub fn baseline_popularity(
    train: &RatingTable,
    popularity: &PopularityTable,
    target: UserId,
    k: usize,
) -> Vec<ScoredItem> {
    popularity_scores(popularity)
        .into_iter()
        .filter(|s| train.rating(target, s.movie_id).is_none())
        .take(k)
        .collect()
}

/// Cosine similarity between users' rating vectors, with the best
/// `neighbors` users voting for the movies they rated.
#[derive(Debug, Clone)]
pub struct UserCf<'a> {
    ratings: &'a RatingTable,
    norms: BTreeMap<UserId, f64>,
    neighbors: usize,
}

impl<'a> UserCf<'a> {
    pub fn new(ratings: &'a RatingTable, neighbors: usize) -> Self {
        let norms = ratings
            .users()
            .map(|u| {
                let sq: f64 = ratings
                    .user_ratings(u)
                    .map(|r| (r.rating as f64).powi(2))
                    .sum();
                (u, sq.sqrt())
            })
            .collect();
        UserCf {
            ratings,
            norms,
            neighbors,
        }
    }

    /// Most similar users with positive similarity, best first, lower id on ties.
    pub fn neighbors(&self, target: UserId) -> Vec<(UserId, f64)> {
        let Some(&own) = self.norms.get(&target) else {
            return Vec::new();
        };
        let mut dots: BTreeMap<UserId, f64> = BTreeMap::new();
        for r in self.ratings.user_ratings(target) {
            for o in self.ratings.movie_ratings(r.movie_id) {
                if o.user_id != target {
                    *dots.entry(o.user_id).or_default() += r.rating as f64 * o.rating as f64;
                }
            }
        }
        let mut sims: Vec<(UserId, f64)> = dots
            .into_iter()
            .map(|(v, d)| (v, d / (own * self.norms[&v])))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        sims.truncate(self.neighbors);
        sims
    }

    /// Similarity-weighted rating votes for every movie a neighbor rated.
    pub fn scores(&self, target: UserId) -> Vec<ScoredItem> {
        let mut votes: BTreeMap<MovieId, f64> = BTreeMap::new();
        for (v, sim) in self.neighbors(target) {
            for r in self.ratings.user_ratings(v) {
                *votes.entry(r.movie_id).or_default() += sim * r.rating as f64;
            }
        }
        let mut items: Vec<ScoredItem> = votes
            .into_iter()
            .map(|(movie_id, score)| ScoredItem { movie_id, score })
            .collect();
        sort_items(&mut items);
        items
    }
}

/// Top-`k` unrated movies by neighbor votes, or by popularity when the target has no neighbors.
pub fn baseline_user_cf(
    cf: &UserCf<'_>,
    popularity: &PopularityTable,
    target: UserId,
    k: usize,
) -> Vec<ScoredItem> {
    let scores = cf.scores(target);
    if scores.is_empty() {
        return baseline_popularity(cf.ratings, popularity, target, k);
    }
    scores
        .into_iter()
        .filter(|s| cf.ratings.rating(target, s.movie_id).is_none())
        .take(k)
        .collect()
}
