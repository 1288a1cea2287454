use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClassMask, Component};
use crate::dataset::{
    Catalog, GenreMask, InterestProfile, PopularityTable, ProfileMap, RatingTable, UserId,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassKind {
    Sup,
    Sf,
    Sfs,
    Smpf,
    Smpsf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseClass {
    pub kind: ClassKind,
    pub target: UserId,
    /// Never contains `target`.
    pub members: BTreeSet<UserId>,
}

/// Read-only tables the class builders draw from.
#[derive(Debug, Clone, Copy)]
pub struct ClassInputs<'a> {
    pub ratings: &'a RatingTable,
    /// `None` when the dataset ships no demographics.
    pub profiles: Option<&'a ProfileMap>,
    pub interests: &'a BTreeMap<UserId, InterestProfile>,
    pub catalog: &'a Catalog,
    pub popularity: &'a PopularityTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassOptions {
    /// Minimum number of co-liked movies for SF membership.
    pub min_shared: usize,
    /// Read "selected" in SMPF/SMPSF as "rated" instead of "liked".
    pub selection_means_rated: bool,
}

impl Default for ClassOptions {
    fn default() -> Self {
        ClassOptions {
            min_shared: 1,
            selection_means_rated: false,
        }
    }
}

fn interest(
    interests: &BTreeMap<UserId, InterestProfile>,
    user: UserId,
) -> Result<&InterestProfile> {
    interests
        .get(&user)
        .ok_or_else(|| Error::NotFound(format!("no interest profile for user {user}")))
}

fn class(kind: ClassKind, target: UserId, members: impl Iterator<Item = UserId>) -> BaseClass {
    BaseClass {
        kind,
        target,
        members: members.filter(|&u| u != target).collect(),
    }
}

/// Users sharing the target's gender, and its age bin when `use_age` is set.
pub fn base_class_sup(target: UserId, profiles: &ProfileMap, use_age: bool) -> Result<BaseClass> {
    let me = profiles
        .get(&target)
        .ok_or_else(|| Error::NotFound(format!("no profile for user {target}")))?;
    Ok(class(
        ClassKind::Sup,
        target,
        profiles
            .values()
            .filter(|p| p.gender == me.gender && (!use_age || p.age_bin == me.age_bin))
            .map(|p| p.user_id),
    ))
}

/// Sum over co-rated movies of the product of squared ratings.
pub fn sf_similarity(u: UserId, v: UserId, ratings: &RatingTable) -> f64 {
    let mut a = ratings.user_ratings(u).peekable();
    let mut b = ratings.user_ratings(v).peekable();
    let mut total = 0.0;
    while let (Some(x), Some(y)) = (a.peek(), b.peek()) {
        match x.movie_id.cmp(&y.movie_id) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                let (rx, ry) = (x.rating as f64, y.rating as f64);
                total += rx * rx * ry * ry;
                a.next();
                b.next();
            }
        }
    }
    total
}

/// Users whose liked set overlaps the target's in at least `min_shared` movies.
pub fn base_class_sf(
    target: UserId,
    interests: &BTreeMap<UserId, InterestProfile>,
    min_shared: usize,
) -> Result<BaseClass> {
    let liked = &interest(interests, target)?.liked;
    Ok(class(
        ClassKind::Sf,
        target,
        interests
            .values()
            .filter(|p| p.liked.intersection(liked).take(min_shared).count() >= min_shared)
            .map(|p| p.user_id),
    ))
}

fn liked_mask(profile: &InterestProfile, catalog: &Catalog) -> GenreMask {
    profile
        .liked
        .iter()
        .fold(0, |acc, &m| acc | catalog.genre_mask(m))
}

/// Users who like at least one movie sharing a genre with the target's liked movies.
pub fn base_class_sfs(
    target: UserId,
    interests: &BTreeMap<UserId, InterestProfile>,
    catalog: &Catalog,
) -> Result<BaseClass> {
    let target_genres = liked_mask(interest(interests, target)?, catalog);
    Ok(class(
        ClassKind::Sfs,
        target,
        interests
            .values()
            .filter(|p| {
                p.liked
                    .iter()
                    .any(|&m| catalog.genre_mask(m) & target_genres != 0)
            })
            .map(|p| p.user_id),
    ))
}

/// Users who selected at least one of the most popular movies.
pub fn base_class_smpf(
    target: UserId,
    interests: &BTreeMap<UserId, InterestProfile>,
    popularity: &PopularityTable,
    selection_means_rated: bool,
) -> Result<BaseClass> {
    interest(interests, target)?;
    Ok(class(
        ClassKind::Smpf,
        target,
        interests
            .values()
            .filter(|p| {
                if selection_means_rated {
                    p.rated().any(|m| popularity.is_top_movie(m))
                } else {
                    p.liked.iter().any(|&m| popularity.is_top_movie(m))
                }
            })
            .map(|p| p.user_id),
    ))
}

/// Users who selected at least one movie in one of the most popular genres.
pub fn base_class_smpsf(
    target: UserId,
    interests: &BTreeMap<UserId, InterestProfile>,
    popularity: &PopularityTable,
    catalog: &Catalog,
    selection_means_rated: bool,
) -> Result<BaseClass> {
    interest(interests, target)?;
    let top = |m| popularity.has_top_genre(catalog.genre_mask(m));
    Ok(class(
        ClassKind::Smpsf,
        target,
        interests
            .values()
            .filter(|p| {
                if selection_means_rated {
                    p.rated().any(top)
                } else {
                    p.liked.iter().copied().any(top)
                }
            })
            .map(|p| p.user_id),
    ))
}

/// All base classes for one target user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseClasses {
    pub target: UserId,
    pub sup_gender: BaseClass,
    pub sup_gender_age: BaseClass,
    pub sf: BaseClass,
    pub sfs: BaseClass,
    pub smpf: BaseClass,
    pub smpsf: BaseClass,
    /// False when SUP fell back to all users for lack of demographics.
    pub profiles_available: bool,
}

impl BaseClasses {
    pub fn compute(
        target: UserId,
        inputs: &ClassInputs<'_>,
        options: &ClassOptions,
    ) -> Result<Self> {
        let interests = inputs.interests;
        interest(interests, target)?;
        let rated_users = || interests.keys().copied();

        let profile_sup = match inputs.profiles {
            Some(p) if p.contains_key(&target) => Some((
                base_class_sup(target, p, false)?,
                base_class_sup(target, p, true)?,
            )),
            _ => None,
        };
        let profiles_available = profile_sup.is_some();
        let (mut sup_gender, mut sup_gender_age) = profile_sup.unwrap_or_else(|| {
            log::warn!(
                "no demographic profile for user {target}; profile class covers all users and the age predicate is disabled"
            );
            let all = class(ClassKind::Sup, target, rated_users());
            (all.clone(), all)
        });
        // Users without ratings cannot contribute items.
        sup_gender.members.retain(|u| interests.contains_key(u));
        sup_gender_age.members.retain(|u| interests.contains_key(u));

        Ok(BaseClasses {
            target,
            sup_gender,
            sup_gender_age,
            sf: base_class_sf(target, interests, options.min_shared)?,
            sfs: base_class_sfs(target, interests, inputs.catalog)?,
            smpf: base_class_smpf(
                target,
                interests,
                inputs.popularity,
                options.selection_means_rated,
            )?,
            smpsf: base_class_smpsf(
                target,
                interests,
                inputs.popularity,
                inputs.catalog,
                options.selection_means_rated,
            )?,
            profiles_available,
        })
    }

    pub fn sup(&self, use_age: bool) -> &BaseClass {
        if use_age {
            &self.sup_gender_age
        } else {
            &self.sup_gender
        }
    }

    pub fn component(&self, c: Component) -> &BaseClass {
        match c {
            Component::Sf => &self.sf,
            Component::Sfs => &self.sfs,
            Component::Smpf => &self.smpf,
            Component::Smpsf => &self.smpsf,
        }
    }

    /// SUP intersected with every component class of `mask`.
    pub fn members(&self, mask: ClassMask) -> BTreeSet<UserId> {
        let parts: Vec<&BTreeSet<UserId>> = mask
            .components
            .iter()
            .map(|c| &self.component(c).members)
            .collect();
        self.sup(mask.use_age)
            .members
            .iter()
            .copied()
            .filter(|u| parts.iter().all(|p| p.contains(u)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        interest_profiles, popularity_ranking, profile_map, AgeBin, Gender, MovieRecord,
        RatingRecord, UserProfile,
    };

    fn table(rows: &[(UserId, u32, u8)]) -> RatingTable {
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

    fn profile(u: UserId, gender: Gender, age: u32) -> UserProfile {
        UserProfile {
            user_id: u,
            gender,
            age_bin: AgeBin::from_age(age),
            raw_age_code: age,
        }
    }

    fn catalog(rows: &[(u32, &[&str])]) -> Catalog {
        Catalog::new(rows.iter().map(|&(id, g)| MovieRecord {
            movie_id: id,
            title: String::new(),
            genres: g.iter().map(|s| s.to_string()).collect(),
        }))
        .unwrap()
    }

    fn members(c: &BaseClass) -> Vec<UserId> {
        c.members.iter().copied().collect()
    }

    #[test]
    fn sup_gender_and_age() {
        let p = profile_map([
            profile(1, Gender::F, 35),
            profile(2, Gender::F, 35),
            profile(3, Gender::F, 18),
            profile(4, Gender::M, 35),
        ]);
        assert_eq!(members(&base_class_sup(1, &p, true).unwrap()), vec![2]);
        assert_eq!(members(&base_class_sup(1, &p, false).unwrap()), vec![2, 3]);
        let lonely = profile_map([profile(1, Gender::F, 35), profile(4, Gender::M, 35)]);
        assert!(base_class_sup(1, &lonely, false)
            .unwrap()
            .members
            .is_empty());
    }

    #[test]
    fn sf_similarity_values() {
        let t = table(&[
            (1, 1, 2),
            (2, 1, 3),
            (1, 2, 1),
            (2, 2, 1),
            (1, 3, 4),
            (3, 9, 5),
            (4, 9, 5),
        ]);
        assert_eq!(sf_similarity(1, 2, &t), 37.0);
        assert_eq!(sf_similarity(1, 3, &t), 0.0);
        assert_eq!(sf_similarity(3, 4, &t), 625.0);
    }

    #[test]
    fn sf_membership_threshold() {
        // Everyone rates uniformly so all rated movies are liked.
        let t = table(&[
            (1, 1, 4),
            (1, 2, 4),
            (2, 2, 4),
            (2, 3, 4),
            (3, 3, 4),
            (3, 4, 4),
        ]);
        let i = interest_profiles(&t);
        assert_eq!(members(&base_class_sf(1, &i, 1).unwrap()), vec![2]);
        assert!(base_class_sf(1, &i, 2).unwrap().members.is_empty());
        assert!(matches!(
            base_class_sf(9, &i, 1).unwrap_err(),
            Error::NotFound(_)
        ));
    }

    #[test]
    fn sfs_genre_overlap() {
        let c = catalog(&[
            (1, &["Action"]),
            (2, &["Action", "Drama"]),
            (3, &["Comedy"]),
        ]);
        let t = table(&[(1, 1, 4), (2, 2, 4), (3, 3, 4), (4, 1, 4)]);
        let i = interest_profiles(&t);
        assert_eq!(members(&base_class_sfs(1, &i, &c).unwrap()), vec![2, 4]);
    }

    #[test]
    fn smpf_requires_liking() {
        let c = catalog(&[
            (1, &["A"]),
            (2, &["B"]),
            (3, &["C"]),
            (4, &["D"]),
            (5, &["E"]),
            (6, &["F"]),
            (7, &["G"]),
        ]);
        // Movie 1 is the most popular. User 4 rated it 1 while averaging 3 -> not liked.
        let t = table(&[
            (1, 1, 5),
            (2, 1, 5),
            (3, 1, 5),
            (4, 1, 1),
            (4, 7, 5),
            (1, 2, 5),
            (2, 2, 5),
            (1, 3, 4),
            (3, 3, 4),
            (2, 4, 4),
            (3, 4, 4),
            (1, 5, 4),
            (2, 5, 4),
            (5, 6, 3),
        ]);
        let i = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 5).unwrap();
        assert_eq!(pop.top_movies[0], 1);
        assert!(!pop.is_top_movie(6) && !pop.is_top_movie(7));
        let liked = base_class_smpf(1, &i, &pop, false).unwrap();
        assert_eq!(members(&liked), vec![2, 3]);
        let rated = base_class_smpf(1, &i, &pop, true).unwrap();
        assert_eq!(members(&rated), vec![2, 3, 4]);
    }

    #[test]
    fn smpsf_saturates_when_all_genres_top() {
        let c = catalog(&[(1, &["Drama"]), (2, &["Comedy"])]);
        let t = table(&[(1, 1, 4), (2, 2, 4), (3, 1, 3), (3, 2, 5)]);
        let i = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 5).unwrap();
        assert_eq!(
            members(&base_class_smpsf(1, &i, &pop, &c, false).unwrap()),
            vec![2, 3]
        );
        let pop1 = popularity_ranking(&t, &c, 1).unwrap();
        assert_eq!(pop1.top_genres, vec!["Comedy".to_string()]);
        assert_eq!(
            members(&base_class_smpsf(1, &i, &pop1, &c, false).unwrap()),
            vec![2, 3]
        );
    }

    #[test]
    fn degenerate_sup_without_profiles() {
        let c = catalog(&[(1, &["Drama"])]);
        let t = table(&[(1, 1, 4), (2, 1, 4), (3, 1, 4)]);
        let i = interest_profiles(&t);
        let pop = popularity_ranking(&t, &c, 5).unwrap();
        let inputs = ClassInputs {
            ratings: &t,
            profiles: None,
            interests: &i,
            catalog: &c,
            popularity: &pop,
        };
        let b = BaseClasses::compute(1, &inputs, &ClassOptions::default()).unwrap();
        assert!(!b.profiles_available);
        assert_eq!(members(&b.sup_gender), vec![2, 3]);
        assert_eq!(b.sup_gender, b.sup_gender_age);
    }
}
