use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AgeBin, Gender, MovieId, MovieRecord, RatingRecord, RatingTable, UserId, UserProfile};
use crate::error::{Error, Result};

const MEMORY: &str = "<memory>";

/// Decodes a file as UTF-8, falling back to Latin-1 line by line.
fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => e
            .as_bytes()
            .split(|&b| b == b'\n')
            .map(|line| match std::str::from_utf8(line) {
                Ok(s) => s.to_owned(),
                Err(_) => line.iter().map(|&b| b as char).collect(),
            })
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

/// Numbered, non-blank lines with trailing `\r` removed.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn is_dat(text: &str) -> bool {
    lines(text).next().is_some_and(|(_, l)| l.contains("::"))
}

fn starts_with_digit(s: &str) -> bool {
    s.trim_start().starts_with(|c: char| c.is_ascii_digit())
}

fn field<T: std::str::FromStr>(raw: &str, what: &str, origin: &Path, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("invalid {what} {raw:?}")))
}

fn rating_value(raw: &str, origin: &Path, line: usize) -> Result<u8> {
    let raw = raw.trim();
    let value: f64 = raw
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("invalid rating {raw:?}")))?;
    if value.fract() != 0.0 || !(1.0..=5.0).contains(&value) {
        return Err(Error::Domain(format!(
            "{}:{line}: rating {raw} outside the integer scale [1,5]",
            origin.display()
        )));
    }
    Ok(value as u8)
}

pub fn parse_ratings(path: impl AsRef<Path>) -> Result<RatingTable> {
    let path = path.as_ref();
    parse_ratings_from(&read_text(path)?, path)
}

/// Parses ratings from in-memory text in either `::` or CSV-with-header layout.
pub fn parse_ratings_text(text: &str) -> Result<RatingTable> {
    parse_ratings_from(text, Path::new(MEMORY))
}

fn parse_ratings_from(text: &str, origin: &Path) -> Result<RatingTable> {
    let dat = is_dat(text);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (n, (line_no, line)) in lines(text).enumerate() {
        if !dat && n == 0 && !starts_with_digit(line) {
            continue;
        }
        let parts: Vec<&str> = if dat {
            line.split("::").collect()
        } else {
            line.split(',').collect()
        };
        if parts.len() != 4 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 4 fields, found {}", parts.len()),
            ));
        }
        let record = RatingRecord {
            user_id: field(parts[0], "user id", origin, line_no)?,
            movie_id: field(parts[1], "movie id", origin, line_no)?,
            rating: rating_value(parts[2], origin, line_no)?,
            timestamp: field(parts[3], "timestamp", origin, line_no)?,
        };
        if !seen.insert((record.user_id, record.movie_id)) {
            return Err(Error::parse(
                origin,
                line_no,
                format!(
                    "duplicate rating of movie {} by user {}",
                    record.movie_id, record.user_id
                ),
            ));
        }
        records.push(record);
    }
    RatingTable::from_records(records)
}

pub fn parse_users(path: impl AsRef<Path>) -> Result<Vec<UserProfile>> {
    let path = path.as_ref();
    parse_users_from(&read_text(path)?, path)
}

pub fn parse_users_text(text: &str) -> Result<Vec<UserProfile>> {
    parse_users_from(text, Path::new(MEMORY))
}

fn parse_users_from(text: &str, origin: &Path) -> Result<Vec<UserProfile>> {
    let dat = is_dat(text);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, (line_no, line)) in lines(text).enumerate() {
        if !dat && n == 0 && !starts_with_digit(line) {
            continue;
        }
        let parts: Vec<&str> = if dat {
            line.split("::").collect()
        } else {
            line.split(',').collect()
        };
        if parts.len() < 3 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected at least 3 fields, found {}", parts.len()),
            ));
        }
        let user_id: UserId = field(parts[0], "user id", origin, line_no)?;
        let gender = match parts[1].trim() {
            "M" => Gender::M,
            "F" => Gender::F,
            other => {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("unknown gender token {other:?}"),
                ))
            }
        };
        let raw_age_code: u32 = field(parts[2], "age", origin, line_no)?;
        if !seen.insert(user_id) {
            return Err(Error::parse(
                origin,
                line_no,
                format!("duplicate user {user_id}"),
            ));
        }
        out.push(UserProfile {
            user_id,
            gender,
            age_bin: AgeBin::from_age(raw_age_code),
            raw_age_code,
        });
    }
    Ok(out)
}

pub fn parse_movies(path: impl AsRef<Path>) -> Result<Vec<MovieRecord>> {
    let path = path.as_ref();
    parse_movies_from(&read_text(path)?, path)
}

pub fn parse_movies_text(text: &str) -> Result<Vec<MovieRecord>> {
    parse_movies_from(text, Path::new(MEMORY))
}

fn genre_set(raw: &str, origin: &Path, line: usize) -> Result<BTreeSet<String>> {
    let genres: BTreeSet<String> = raw
        .split('|')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(str::to_owned)
        .collect();
    if genres.is_empty() {
        return Err(Error::parse(origin, line, "empty genre field"));
    }
    Ok(genres)
}

fn parse_movies_from(text: &str, origin: &Path) -> Result<Vec<MovieRecord>> {
    let mut rows: Vec<(usize, MovieId, String, String)> = Vec::new();
    if is_dat(text) {
        for (line_no, line) in lines(text) {
            // Titles may contain "::"-free text only, but genres are always last.
            let Some((head, genres)) = line.rsplit_once("::") else {
                return Err(Error::parse(origin, line_no, "expected 3 fields"));
            };
            let Some((id, title)) = head.split_once("::") else {
                return Err(Error::parse(origin, line_no, "expected 3 fields"));
            };
            rows.push((
                line_no,
                field(id, "movie id", origin, line_no)?,
                title.to_owned(),
                genres.to_owned(),
            ));
        }
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(origin, line, e.to_string())
            })?;
            let line_no = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 3 {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected 3 fields, found {}", rec.len()),
                ));
            }
            rows.push((
                line_no,
                field(&rec[0], "movie id", origin, line_no)?,
                rec[1].to_owned(),
                rec[2].to_owned(),
            ));
        }
    }

    let mut seen = HashSet::new();
    rows.into_iter()
        .map(|(line_no, movie_id, title, genres)| {
            if !seen.insert(movie_id) {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("duplicate movie {movie_id}"),
                ));
            }
            Ok(MovieRecord {
                movie_id,
                title,
                genres: genre_set(&genres, origin, line_no)?,
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(MEMORY, io),
        other => Error::Domain(format!("CSV write failed: {other:?}")),
    }
}

/// Writes `user_id,movie_id,rating,timestamp` rows in table order.
pub fn write_ratings_csv(table: &RatingTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "movie_id", "rating", "timestamp"])
        .map_err(csv_err)?;
    for r in table.records() {
        w.write_record([
            r.user_id.to_string(),
            r.movie_id.to_string(),
            r.rating.to_string(),
            r.timestamp.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(MEMORY, e))
}

pub fn write_users_csv(profiles: &[UserProfile], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "gender", "age"])
        .map_err(csv_err)?;
    for p in profiles {
        let gender = match p.gender {
            Gender::M => "M",
            Gender::F => "F",
        };
        w.write_record([
            p.user_id.to_string(),
            gender.to_owned(),
            p.raw_age_code.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(MEMORY, e))
}

pub fn write_movies_csv(movies: &[MovieRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["movie_id", "title", "genres"])
        .map_err(csv_err)?;
    for m in movies {
        let genres: Vec<&str> = m.genres.iter().map(String::as_str).collect();
        w.write_record([m.movie_id.to_string(), m.title.clone(), genres.join("|")])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(MEMORY, e))
}
