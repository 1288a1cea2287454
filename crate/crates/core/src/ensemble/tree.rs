use std::fmt::Write;

use super::{EnsembleSelection, FuzzyRule};
use crate::dataset::{Gender, UserProfile};

const PATH_COLORS: [&str; 3] = ["red", "violet", "blue"];

/// Renders the rules as a DOT decision tree: root, gender, optional age bin,
/// then one leaf per rule carrying its precision. The selected rules' leaf
/// edges are labeled 1, 2 and 3.
pub fn export_rule_tree(
    rules: &[FuzzyRule],
    selection: &EnsembleSelection,
    profile: Option<&UserProfile>,
) -> String {
    let gender = match profile.map(|p| p.gender) {
        Some(Gender::F) => "Female",
        Some(Gender::M) => "Male",
        None => "any",
    };
    let age = profile.map_or_else(|| "any".to_owned(), |p| format!("{:?}", p.age_bin));

    let mut dot = String::new();
    let _ = writeln!(dot, "digraph rules {{");
    let _ = writeln!(dot, "  node [shape=box, fontname=\"Helvetica\"];");
    let _ = writeln!(dot, "  root [label=\"User {}\"];", selection.target);
    let _ = writeln!(dot, "  gender [label=\"Gender = {gender}\"];");
    let _ = writeln!(dot, "  age [label=\"Age = {age}\"];");
    let _ = writeln!(dot, "  root -> gender;");
    let _ = writeln!(dot, "  gender -> age;");
    for rule in rules {
        let parent = if rule.mask.use_age { "age" } else { "gender" };
        let _ = writeln!(
            dot,
            "  r{row} [label=\"{row}: {components}\\nP = {precision:.4}\"];",
            row = rule.row,
            components = rule.mask.components,
            precision = rule.precision,
        );
        match selection.top3.iter().position(|s| s.row == rule.row) {
            Some(rank) => {
                let _ = writeln!(
                    dot,
                    "  {parent} -> r{} [label=\"{}\", color={}, penwidth=2];",
                    rule.row,
                    rank + 1,
                    PATH_COLORS[rank]
                );
            }
            None => {
                let _ = writeln!(dot, "  {parent} -> r{};", rule.row);
            }
        }
    }
    let _ = writeln!(dot, "}}");
    dot
}
