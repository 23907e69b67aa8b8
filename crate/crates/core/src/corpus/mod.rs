//! Crash corpora: exploration from seed crashes, patch-based ground truth,
//! grouping quality metrics, and the on-disk corpus layout.

mod explore;
mod metrics;
mod store;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{execute, Program};
use crate::triage::CrashRecord;

pub use explore::{dictionary, explore, ExploreConfig};
pub use metrics::{score, score_partition, BugMetrics, Metrics};
pub use store::{load_corpus, load_labels, save_corpus, save_labels};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("seed input does not crash the program")]
    SeedNotCrashing,
    #[error("no ground-truth label for crash {0}")]
    LabelMissing(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub crash_id: String,
    /// `None` when no single patch explains the crash.
    pub bug: Option<String>,
}

/// Label each crash with the one bug whose patch makes it stop crashing.
pub fn label_with_patches(
    corpus: &[CrashRecord],
    original: &Program,
    patches: &BTreeMap<String, Program>,
    step_budget: u64,
) -> Vec<GroundTruthLabel> {
    corpus
        .par_iter()
        .map(|c| {
            let bug = if !execute(original, &c.input, step_budget).is_crash() {
                None
            } else {
                let fixed: Vec<&String> = patches
                    .iter()
                    .filter(|(_, p)| !execute(p, &c.input, step_budget).is_crash())
                    .map(|(b, _)| b)
                    .collect();
                match fixed.as_slice() {
                    [one] => Some((*one).clone()),
                    [] => None,
                    many => {
                        log::warn!(
                            "crash {} is fixed by {} patches ({}); labelled unknown",
                            c.id,
                            many.len(),
                            many.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                        );
                        None
                    }
                }
            };
            GroundTruthLabel {
                crash_id: c.id.clone(),
                bug,
            }
        })
        .collect()
}

/// Keep at most `cap` crashes per label (unknown counts as one label),
/// sampled with a seeded rng; corpus order is preserved.
pub fn cap_per_bug(corpus: &[CrashRecord], cap: usize, rng_seed: u64) -> Vec<CrashRecord> {
    let mut by_label: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (i, c) in corpus.iter().enumerate() {
        by_label.entry(c.label.as_deref()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut keep = vec![false; corpus.len()];
    for idx in by_label.values() {
        let chosen: Vec<usize> = if idx.len() > cap {
            idx.choose_multiple(&mut rng, cap).copied().collect()
        } else {
            idx.clone()
        };
        for i in chosen {
            keep[i] = true;
        }
    }
    corpus
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(c, _)| c.clone())
        .collect()
}
