use std::collections::{BTreeMap, BTreeSet};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Catalog, GenreMask, MovieId, RatingRecord, RatingTable, UserId};
use crate::error::{Error, Result};
use crate::rng;

/// A user's like / not-like split of their rated movies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterestProfile {
    pub user_id: UserId,
    /// Floor of the user's mean rating.
    pub threshold: u8,
    pub liked: BTreeSet<MovieId>,
    pub not_liked: BTreeSet<MovieId>,
}

impl InterestProfile {
    pub fn rated(&self) -> impl Iterator<Item = MovieId> + '_ {
        self.liked.iter().chain(self.not_liked.iter()).copied()
    }
}

pub fn compute_interest_profile(user: UserId, table: &RatingTable) -> Result<InterestProfile> {
    let (sum, n) = table
        .user_ratings(user)
        .fold((0u64, 0u64), |(s, n), r| (s + r.rating as u64, n + 1));
    if n == 0 {
        return Err(Error::NotFound(format!("user {user} has no ratings")));
    }
    let threshold = (sum / n) as u8;
    let (liked, not_liked): (Vec<&RatingRecord>, Vec<&RatingRecord>) = table
        .user_ratings(user)
        .partition(|r| r.rating >= threshold);
    Ok(InterestProfile {
        user_id: user,
        threshold,
        liked: liked.into_iter().map(|r| r.movie_id).collect(),
        not_liked: not_liked.into_iter().map(|r| r.movie_id).collect(),
    })
}

/// Interest profiles of every user in the table.
pub fn interest_profiles(table: &RatingTable) -> BTreeMap<UserId, InterestProfile> {
    table
        .users()
        .map(|u| {
            let p = compute_interest_profile(u, table).expect("indexed users have ratings");
            (u, p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRank {
    pub movie_id: MovieId,
    pub selection_count: usize,
    pub mean_rating: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreRank {
    pub genre: String,
    pub selection_count: usize,
}

/// Movies and genres ranked by how often they were rated.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityTable {
    pub movie_rank: Vec<MovieRank>,
    pub top_movies: Vec<MovieId>,
    pub genre_rank: Vec<GenreRank>,
    pub top_genres: Vec<String>,
    top_movie_set: BTreeSet<MovieId>,
    top_genre_mask: GenreMask,
    counts: BTreeMap<MovieId, usize>,
}

impl PopularityTable {
    pub fn is_top_movie(&self, movie: MovieId) -> bool {
        self.top_movie_set.contains(&movie)
    }

    pub fn top_genre_mask(&self) -> GenreMask {
        self.top_genre_mask
    }

    pub fn has_top_genre(&self, mask: GenreMask) -> bool {
        mask & self.top_genre_mask != 0
    }

    pub fn selection_count(&self, movie: MovieId) -> usize {
        self.counts.get(&movie).copied().unwrap_or(0)
    }
}

/// Ranks movies by (selection count desc, mean rating desc, id asc) and genres
/// by (selection count desc, name asc), keeping the first `top_n` of each.
pub fn popularity_ranking(
    table: &RatingTable,
    catalog: &Catalog,
    top_n: usize,
) -> Result<PopularityTable> {
    if table.is_empty() {
        return Err(Error::Domain("popularity of an empty rating table".into()));
    }
    let mut movie_rank: Vec<MovieRank> = table
        .movies()
        .map(|m| {
            let (sum, n) = table
                .movie_ratings(m)
                .fold((0u64, 0usize), |(s, n), r| (s + r.rating as u64, n + 1));
            MovieRank {
                movie_id: m,
                selection_count: n,
                mean_rating: sum as f64 / n as f64,
            }
        })
        .collect();
    movie_rank.sort_by(|a, b| {
        b.selection_count
            .cmp(&a.selection_count)
            .then(b.mean_rating.total_cmp(&a.mean_rating))
            .then(a.movie_id.cmp(&b.movie_id))
    });

    let mut genre_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rank in &movie_rank {
        if let Some(movie) = catalog.get(rank.movie_id) {
            for g in &movie.genres {
                *genre_counts.entry(g.as_str()).or_default() += rank.selection_count;
            }
        }
    }
    let mut genre_rank: Vec<GenreRank> = genre_counts
        .into_iter()
        .map(|(g, c)| GenreRank {
            genre: g.to_owned(),
            selection_count: c,
        })
        .collect();
    genre_rank.sort_by(|a, b| {
        b.selection_count
            .cmp(&a.selection_count)
            .then_with(|| a.genre.cmp(&b.genre))
    });

    let top_movies: Vec<MovieId> = movie_rank.iter().take(top_n).map(|r| r.movie_id).collect();
    let top_genres: Vec<String> = genre_rank
        .iter()
        .take(top_n)
        .map(|g| g.genre.clone())
        .collect();
    let top_genre_mask = catalog.mask_of(top_genres.iter().map(String::as_str));
    Ok(PopularityTable {
        top_movie_set: top_movies.iter().copied().collect(),
        counts: movie_rank
            .iter()
            .map(|r| (r.movie_id, r.selection_count))
            .collect(),
        movie_rank,
        top_movies,
        genre_rank,
        top_genres,
        top_genre_mask,
    })
}

/// Keeps each record independently with probability `keep_fraction`.
pub fn sparsify(table: &RatingTable, keep_fraction: f64, seed: u64) -> Result<RatingTable> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Domain(format!(
            "keep fraction {keep_fraction} outside (0,1]"
        )));
    }
    let mut rng = rng::rng_for(seed, &[0x5_9A_45]);
    Ok(table.filter(|_| rng.random::<f64>() < keep_fraction))
}
