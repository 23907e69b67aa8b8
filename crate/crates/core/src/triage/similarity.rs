use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::minilang::CallStack;

/// Unit over which signature edit distance is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    #[default]
    Lines,
    Chars,
}

/// Textual similarity of two canonical renderings: `(max - dist) / max`,
/// where `max` is the larger size and `dist` the edit distance (each edit
/// costs `edit_cost`), both in `unit`s. Two empty texts are identical.
pub fn sim_text(a: &str, b: &str, unit: DistanceUnit, edit_cost: u32) -> f64 {
    let (dist, max) = match unit {
        DistanceUnit::Lines => {
            let la: Vec<&str> = a.lines().collect();
            let lb: Vec<&str> = b.lines().collect();
            (strsim::generic_levenshtein(&la, &lb), la.len().max(lb.len()))
        }
        DistanceUnit::Chars => (
            strsim::levenshtein(a, b),
            a.chars().count().max(b.chars().count()),
        ),
    };
    if max == 0 {
        return 1.0;
    }
    let cost = dist as f64 * f64::from(edit_cost);
    ((max as f64 - cost) / max as f64).clamp(0.0, 1.0)
}

/// Shared function names over the longer stack's frame count.
pub fn sim_call(a: &CallStack, b: &CallStack) -> f64 {
    let max = a.len().max(b.len());
    if max == 0 {
        return 1.0;
    }
    let sa: BTreeSet<&str> = a.function_names().collect();
    let sb: BTreeSet<&str> = b.function_names().collect();
    sa.intersection(&sb).count() as f64 / max as f64
}
