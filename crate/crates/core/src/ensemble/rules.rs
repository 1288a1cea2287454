use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BaseClasses, ClassInputs, ClassMask, ClassOptions, ComponentSet};
use crate::dataset::{RatingTable, UserId};
use crate::error::{Error, Result};

/// A profile + class conjunction with its members and precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    /// 1-based position in the rule table.
    pub row: usize,
    pub mask: ClassMask,
    pub members: BTreeSet<UserId>,
    pub precision: f64,
}

/// Members of the rule `mask` for the classes' target.
pub fn combined_class(mask: ClassMask, classes: &BaseClasses) -> FuzzyRule {
    FuzzyRule {
        row: mask.row_index(),
        mask,
        members: classes.members(mask),
        precision: 0.0,
    }
}

/// Jaccard overlap between the target's rated items and the union of the
/// members' rated items. Zero when both sets are empty.
pub fn class_precision(target: UserId, members: &BTreeSet<UserId>, ratings: &RatingTable) -> f64 {
    let mut marks = vec![false; ratings.max_movie_id() as usize + 1];
    precision_with(target, members, ratings, &mut marks)
}

fn precision_with(
    target: UserId,
    members: &BTreeSet<UserId>,
    ratings: &RatingTable,
    marks: &mut [bool],
) -> f64 {
    marks.fill(false);
    let mut class_items = 0usize;
    for &m in members {
        for r in ratings.user_ratings(m) {
            let slot = &mut marks[r.movie_id as usize];
            if !*slot {
                *slot = true;
                class_items += 1;
            }
        }
    }
    let mut target_items = 0usize;
    let mut shared = 0usize;
    for r in ratings.user_ratings(target) {
        target_items += 1;
        if marks[r.movie_id as usize] {
            shared += 1;
        }
    }
    let union = target_items + class_items - shared;
    if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    }
}

/// Scores all 30 masks for a set of precomputed base classes.
pub fn rules_from_classes(classes: &BaseClasses, ratings: &RatingTable) -> Vec<FuzzyRule> {
    let mut marks = vec![false; ratings.max_movie_id() as usize + 1];
    ClassMask::all()
        .into_iter()
        .map(|mask| {
            let mut rule = combined_class(mask, classes);
            rule.precision = precision_with(classes.target, &rule.members, ratings, &mut marks);
            rule
        })
        .collect()
}

/// The 30 rules for `target`, in table order.
pub fn enumerate_fuzzy_rules(
    target: UserId,
    inputs: &ClassInputs<'_>,
    options: &ClassOptions,
) -> Result<Vec<FuzzyRule>> {
    let classes = BaseClasses::compute(target, inputs, options)?;
    Ok(rules_from_classes(&classes, inputs.ratings))
}

/// The three best rules for a target user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSelection {
    pub target: UserId,
    /// Best first.
    pub top3: Vec<FuzzyRule>,
    /// Set when fewer than three rules had members and the gender-only SF rule
    /// was used as padding.
    pub fallback: bool,
}

fn ranked(rules: &[FuzzyRule]) -> Vec<&FuzzyRule> {
    let mut eligible: Vec<&FuzzyRule> = rules.iter().filter(|r| !r.members.is_empty()).collect();
    eligible.sort_by(|a, b| b.precision.total_cmp(&a.precision).then(a.row.cmp(&b.row)));
    eligible
}

/// Picks the three non-empty rules with the highest precision, lower row first on ties.
pub fn select_ensemble(target: UserId, rules: &[FuzzyRule]) -> Result<EnsembleSelection> {
    let eligible = ranked(rules);
    if eligible.len() < 3 {
        return Err(Error::Selection(format!(
            "only {} rules with members for user {target}",
            eligible.len()
        )));
    }
    Ok(EnsembleSelection {
        target,
        top3: eligible.into_iter().take(3).cloned().collect(),
        fallback: false,
    })
}

/// Like [`select_ensemble`], but pads a short selection with the gender-only SF rule.
pub fn select_ensemble_with_fallback(target: UserId, rules: &[FuzzyRule]) -> EnsembleSelection {
    if let Ok(selection) = select_ensemble(target, rules) {
        return selection;
    }
    let sf_only = ClassMask {
        use_age: false,
        components: ComponentSet::new(&[super::Component::Sf]).expect("non-empty"),
    };
    let pad = rules
        .iter()
        .find(|r| r.mask == sf_only)
        .cloned()
        .unwrap_or_else(|| FuzzyRule {
            row: sf_only.row_index(),
            mask: sf_only,
            members: BTreeSet::new(),
            precision: 0.0,
        });
    let mut top3: Vec<FuzzyRule> = ranked(rules).into_iter().cloned().collect();
    log::warn!(
        "user {target}: {} non-empty rules, padding the ensemble with rule {}",
        top3.len(),
        pad.row
    );
    while top3.len() < 3 {
        top3.push(pad.clone());
    }
    EnsembleSelection {
        target,
        top3,
        fallback: true,
    }
}

/// Writes `row_index,use_age,components,member_count,precision`.
pub fn write_rules_csv(rules: &[FuzzyRule], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "row_index,use_age,components,member_count,precision")?;
    for r in rules {
        writeln!(
            out,
            "{},{},{},{},{:.4}",
            r.row,
            r.mask.use_age,
            r.mask.components,
            r.members.len(),
            r.precision
        )?;
    }
    Ok(())
}
