//! User classes built around a target user and the fuzzy rules that combine
//! them.
//!
//! Five base classes are computed per target: shared profile (SUP), shared
//! liked films (SF), shared film genres (SFS), likers of the most popular
//! films (SMPF) and likers of films in the most popular genres (SMPSF). A rule
//! is SUP (gender, optionally age) intersected with a non-empty subset of the
//! other four; the 30 rules are scored by how well the pooled items of their
//! members cover the target's own items, and the best three form the ensemble.

mod classes;
mod rules;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use classes::{
    base_class_sf, base_class_sfs, base_class_smpf, base_class_smpsf, base_class_sup,
    sf_similarity, BaseClass, BaseClasses, ClassInputs, ClassKind, ClassOptions,
};
pub use rules::{
    class_precision, combined_class, enumerate_fuzzy_rules, rules_from_classes, select_ensemble,
    select_ensemble_with_fallback, write_rules_csv, EnsembleSelection, FuzzyRule,
};
pub use tree::export_rule_tree;

/// The four behavioral base classes a rule can combine with the profile class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    Sf,
    Sfs,
    Smpf,
    Smpsf,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Sf,
        Component::Sfs,
        Component::Smpf,
        Component::Smpsf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Component::Sf => "SF",
            Component::Sfs => "SFS",
            Component::Smpf => "SMPF",
            Component::Smpsf => "SMPSF",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Non-empty subset of [`Component`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ComponentSet(u8);

impl ComponentSet {
    pub fn new(components: &[Component]) -> Option<Self> {
        let bits = components.iter().fold(0, |acc, c| acc | c.bit());
        (bits != 0).then_some(ComponentSet(bits))
    }

    pub fn contains(self, c: Component) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Component> {
        Component::ALL
            .into_iter()
            .filter(move |c| self.contains(*c))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn is_subset(self, other: ComponentSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// All 15 subsets: by size, then lexicographically in SF, SFS, SMPF, SMPSF order.
    pub fn all() -> Vec<ComponentSet> {
        let mut sets: Vec<ComponentSet> = (1u8..16).map(ComponentSet).collect();
        sets.sort_by_key(|s| {
            let positions: Vec<usize> = s.iter().map(|c| c as usize).collect();
            (s.len(), positions)
        });
        sets
    }
}

impl TryFrom<u8> for ComponentSet {
    type Error = String;

    fn try_from(bits: u8) -> Result<Self, Self::Error> {
        if bits == 0 || bits >= 16 {
            Err(format!("invalid component set bits {bits}"))
        } else {
            Ok(ComponentSet(bits))
        }
    }
}

impl From<ComponentSet> for u8 {
    fn from(s: ComponentSet) -> u8 {
        s.0
    }
}

impl fmt::Display for ComponentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.iter().map(Component::label).collect();
        f.write_str(&labels.join("&"))
    }
}

/// Profile part (gender, or gender and age) plus the behavioral components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassMask {
    pub use_age: bool,
    pub components: ComponentSet,
}

impl ClassMask {
    pub const RULE_COUNT: usize = 30;

    /// The 30 masks in rule-table order: rows 1-15 gender only, rows 16-30
    /// gender and age, each over [`ComponentSet::all`].
    pub fn all() -> Vec<ClassMask> {
        [false, true]
            .into_iter()
            .flat_map(|use_age| {
                ComponentSet::all()
                    .into_iter()
                    .map(move |components| ClassMask {
                        use_age,
                        components,
                    })
            })
            .collect()
    }

    /// 1-based row of this mask in [`ClassMask::all`].
    pub fn row_index(self) -> usize {
        let pos = ComponentSet::all()
            .iter()
            .position(|&s| s == self.components)
            .expect("every non-empty set is enumerated");
        pos + 1 + if self.use_age { 15 } else { 0 }
    }
}

impl fmt::Display for ClassMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let profile = if self.use_age { "gender+age" } else { "gender" };
        write!(f, "{profile}:{}", self.components)
    }
}
