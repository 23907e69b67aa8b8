//! AFL-style coarse hit-count buckets over edge coverage.

use std::collections::{BTreeMap, BTreeSet};

use super::outcome::Edge;

/// Inclusive lower bounds of the eight hit-count classes:
/// {1}, {2}, {3}, {4-7}, {8-15}, {16-31}, {32-127}, {128+}.
pub const BUCKET_LOWER_BOUNDS: [u64; 8] = [1, 2, 3, 4, 8, 16, 32, 128];

pub fn bucket_of(count: u64) -> u8 {
    debug_assert!(count >= 1, "edge counts start at 1");
    BUCKET_LOWER_BOUNDS
        .iter()
        .rposition(|&lo| count >= lo)
        .unwrap_or(0) as u8
}

/// Map each edge to the bucket index of its hit count.
pub fn bucket_edges(edges: &BTreeMap<Edge, u64>) -> BTreeSet<(Edge, u8)> {
    edges
        .iter()
        .map(|(e, &n)| (e.clone(), bucket_of(n)))
        .collect()
}
