//! MovieLens tables and the per-user / per-movie statistics derived from them.

mod derive;
mod parse;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use derive::{
    compute_interest_profile, interest_profiles, popularity_ranking, sparsify, GenreRank,
    InterestProfile, MovieRank, PopularityTable,
};
pub use parse::{
    parse_movies, parse_movies_text, parse_ratings, parse_ratings_text, parse_users,
    parse_users_text, write_movies_csv, write_ratings_csv, write_users_csv,
};

pub type UserId = u32;
pub type MovieId = u32;

/// One explicit rating event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user_id: UserId,
    pub movie_id: MovieId,
    pub rating: u8,
    pub timestamp: i64,
}

/// Ratings indexed by user and by movie.
///
/// Records keep their insertion order. The per-user index is sorted by movie id
/// so point lookups are a binary search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingTable {
    records: Vec<RatingRecord>,
    by_user: BTreeMap<UserId, Vec<usize>>,
    by_movie: BTreeMap<MovieId, Vec<usize>>,
}

impl RatingTable {
    pub fn from_records(records: Vec<RatingRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !(1..=5).contains(&r.rating) {
                return Err(Error::Domain(format!(
                    "record {}: rating {} outside [1,5]",
                    i + 1,
                    r.rating
                )));
            }
            if !seen.insert((r.user_id, r.movie_id)) {
                return Err(Error::Domain(format!(
                    "record {}: duplicate rating of movie {} by user {}",
                    i + 1,
                    r.movie_id,
                    r.user_id
                )));
            }
        }
        Ok(Self::index(records))
    }

    // Caller guarantees validity.
    fn index(records: Vec<RatingRecord>) -> Self {
        let mut by_user: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
        let mut by_movie: BTreeMap<MovieId, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_user.entry(r.user_id).or_default().push(i);
            by_movie.entry(r.movie_id).or_default().push(i);
        }
        for idx in by_user.values_mut() {
            idx.sort_by_key(|&i| records[i].movie_id);
        }
        RatingTable {
            records,
            by_user,
            by_movie,
        }
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Users in ascending id order.
    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.by_user.keys().copied()
    }

    /// Movies in ascending id order.
    pub fn movies(&self) -> impl Iterator<Item = MovieId> + '_ {
        self.by_movie.keys().copied()
    }

    pub fn user_count(&self) -> usize {
        self.by_user.len()
    }

    pub fn movie_count(&self) -> usize {
        self.by_movie.len()
    }

    pub fn contains_user(&self, user: UserId) -> bool {
        self.by_user.contains_key(&user)
    }

    /// A user's ratings, ordered by movie id.
    pub fn user_ratings(&self, user: UserId) -> impl Iterator<Item = &RatingRecord> + '_ {
        self.by_user
            .get(&user)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    pub fn movie_ratings(&self, movie: MovieId) -> impl Iterator<Item = &RatingRecord> + '_ {
        self.by_movie
            .get(&movie)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    pub fn rating(&self, user: UserId, movie: MovieId) -> Option<u8> {
        let idx = self.by_user.get(&user)?;
        idx.binary_search_by_key(&movie, |&i| self.records[i].movie_id)
            .ok()
            .map(|pos| self.records[idx[pos]].rating)
    }

    pub fn rated_movies(&self, user: UserId) -> BTreeSet<MovieId> {
        self.user_ratings(user).map(|r| r.movie_id).collect()
    }

    pub fn max_movie_id(&self) -> MovieId {
        self.by_movie.keys().next_back().copied().unwrap_or(0)
    }

    /// Sub-table of the records accepted by `keep`, in original order.
    pub fn filter(&self, mut keep: impl FnMut(&RatingRecord) -> bool) -> RatingTable {
        Self::index(self.records.iter().filter(|r| keep(r)).copied().collect())
    }

    /// Ratings of the `n` lowest user ids.
    pub fn first_users(&self, n: usize) -> RatingTable {
        let cutoff: BTreeSet<UserId> = self.users().take(n).collect();
        self.filter(|r| cutoff.contains(&r.user_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

/// Age group: A is 25 or under, B is over 25 up to 40, C is over 40.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBin {
    A,
    B,
    C,
}

impl AgeBin {
    /// Bins the raw age value. MovieLens-1M stores bucket codes, which are
    /// binned as if they were ages (code 25 lands in A).
    pub fn from_age(value: u32) -> Self {
        match value {
            0..=25 => AgeBin::A,
            26..=40 => AgeBin::B,
            _ => AgeBin::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: UserId,
    pub gender: Gender,
    pub age_bin: AgeBin,
    pub raw_age_code: u32,
}

pub type ProfileMap = BTreeMap<UserId, UserProfile>;

pub fn profile_map(profiles: impl IntoIterator<Item = UserProfile>) -> ProfileMap {
    profiles.into_iter().map(|p| (p.user_id, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovieRecord {
    pub movie_id: MovieId,
    pub title: String,
    pub genres: BTreeSet<String>,
}

/// Genre bitmask over the catalog's interned genre labels.
pub type GenreMask = u64;

/// Movie metadata with genres interned into bitmasks.
#[derive(Debug, Clone)]
pub struct Catalog {
    movies: BTreeMap<MovieId, MovieRecord>,
    genre_names: Vec<String>,
    masks: BTreeMap<MovieId, GenreMask>,
}

impl Catalog {
    pub const MAX_GENRES: usize = 64;

    pub fn new(movies: impl IntoIterator<Item = MovieRecord>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for m in movies {
            let id = m.movie_id;
            if by_id.insert(id, m).is_some() {
                return Err(Error::Domain(format!("duplicate movie id {id}")));
            }
        }
        let genre_names: Vec<String> = by_id
            .values()
            .flat_map(|m| m.genres.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if genre_names.len() > Self::MAX_GENRES {
            return Err(Error::Domain(format!(
                "{} distinct genres exceed the supported {}",
                genre_names.len(),
                Self::MAX_GENRES
            )));
        }
        let mut catalog = Catalog {
            movies: by_id,
            genre_names,
            masks: BTreeMap::new(),
        };
        catalog.masks = catalog
            .movies
            .values()
            .map(|m| {
                (
                    m.movie_id,
                    catalog.mask_of(m.genres.iter().map(String::as_str)),
                )
            })
            .collect();
        Ok(catalog)
    }

    pub fn get(&self, movie: MovieId) -> Option<&MovieRecord> {
        self.movies.get(&movie)
    }

    pub fn movies(&self) -> impl Iterator<Item = &MovieRecord> + '_ {
        self.movies.values()
    }

    pub fn len(&self) -> usize {
        self.movies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movies.is_empty()
    }

    pub fn genre_names(&self) -> &[String] {
        &self.genre_names
    }

    pub fn genre_bit(&self, genre: &str) -> Option<GenreMask> {
        self.genre_names
            .binary_search_by(|g| g.as_str().cmp(genre))
            .ok()
            .map(|i| 1u64 << i)
    }

    pub fn mask_of<'a>(&self, genres: impl IntoIterator<Item = &'a str>) -> GenreMask {
        genres
            .into_iter()
            .filter_map(|g| self.genre_bit(g))
            .fold(0, |acc, b| acc | b)
    }

    /// Genre mask of a movie; unknown movies have no genres.
    pub fn genre_mask(&self, movie: MovieId) -> GenreMask {
        self.masks.get(&movie).copied().unwrap_or(0)
    }
}
