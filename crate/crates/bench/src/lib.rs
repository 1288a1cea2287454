//! Shared fixture loading for the benchmarks.

use std::path::{Path, PathBuf};

use utv_core::dataset::{
    parse_movies, parse_ratings, parse_users, profile_map, Catalog, ProfileMap, RatingTable,
};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy50")
}

pub fn load_fixture() -> (RatingTable, ProfileMap, Catalog) {
    let dir = fixture_dir();
    let ratings = parse_ratings(dir.join("ratings.dat")).expect("fixture ratings");
    let profiles = profile_map(parse_users(dir.join("users.dat")).expect("fixture users"));
    let catalog = Catalog::new(parse_movies(dir.join("movies.dat")).expect("fixture movies"))
        .expect("catalog");
    (ratings, profiles, catalog)
}
