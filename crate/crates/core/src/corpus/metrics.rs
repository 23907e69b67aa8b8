use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::siggen::FaultSignature;
use crate::triage::FaultGroup;

use super::CorpusError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugMetrics {
    pub crashes: usize,
    pub fault_sig_count: usize,
    pub group_count: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub missed: usize,
}

impl BugMetrics {
    fn add(&mut self, o: &BugMetrics) {
        self.crashes += o.crashes;
        self.fault_sig_count += o.fault_sig_count;
        self.group_count += o.group_count;
        self.correct += o.correct;
        self.incorrect += o.incorrect;
        self.missed += o.missed;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_bug: BTreeMap<String, BugMetrics>,
    /// Crashes no single patch explains; kept out of `totals`.
    pub unknown: BugMetrics,
    pub totals: BugMetrics,
}

impl Metrics {
    /// Share of labelled crashes grouped with their own bug.
    pub fn correct_ratio(&self) -> f64 {
        if self.totals.crashes == 0 {
            return 1.0;
        }
        self.totals.correct as f64 / self.totals.crashes as f64
    }
}

/// Score signature-based groups. Signatures are attributed to bugs the same
/// way groups are, to fill `fault_sig_count`.
pub fn score(
    groups: &[FaultGroup],
    signatures: &[FaultSignature],
    labels: &BTreeMap<String, Option<String>>,
    missed: &[String],
) -> Result<Metrics, CorpusError> {
    let group_members: Vec<&[String]> = groups.iter().map(|g| g.members.as_slice()).collect();
    let mut m = score_partition(&group_members, labels, missed)?;
    for s in signatures {
        if let Some(bug) = attribute(&s.members, labels)? {
            m.per_bug.entry(bug).or_default().fault_sig_count += 1;
        }
    }
    m.totals.fault_sig_count = m.per_bug.values().map(|b| b.fault_sig_count).sum();
    Ok(m)
}

/// Score any partition of crash ids (also used for the baselines). Each
/// group is attributed to the most common known label among its members,
/// ties going to the smaller bug id; a member is correct when its own label
/// is the group's bug.
pub fn score_partition(
    groups: &[&[String]],
    labels: &BTreeMap<String, Option<String>>,
    missed: &[String],
) -> Result<Metrics, CorpusError> {
    let mut m = Metrics::default();
    let mut seen = BTreeSet::new();
    let label_of = |id: &str| -> Result<Option<&String>, CorpusError> {
        labels
            .get(id)
            .map(Option::as_ref)
            .ok_or_else(|| CorpusError::LabelMissing(id.to_string()))
    };
    for g in groups {
        let bug = attribute(g, labels)?;
        if let Some(b) = &bug {
            m.per_bug.entry(b.clone()).or_default().group_count += 1;
        }
        for id in g.iter() {
            seen.insert(id.as_str());
            match label_of(id)? {
                Some(own) => {
                    let e = m.per_bug.entry(own.clone()).or_default();
                    e.crashes += 1;
                    if bug.as_ref() == Some(own) {
                        e.correct += 1;
                    } else {
                        e.incorrect += 1;
                    }
                }
                None => m.unknown.crashes += 1,
            }
        }
    }
    for id in missed {
        if !seen.insert(id.as_str()) {
            continue;
        }
        match label_of(id)? {
            Some(own) => {
                let e = m.per_bug.entry(own.clone()).or_default();
                e.crashes += 1;
                e.missed += 1;
            }
            None => {
                m.unknown.crashes += 1;
                m.unknown.missed += 1;
            }
        }
    }
    let mut totals = BugMetrics::default();
    for b in m.per_bug.values() {
        totals.add(b);
    }
    m.totals = totals;
    Ok(m)
}

fn attribute(
    members: &[String],
    labels: &BTreeMap<String, Option<String>>,
) -> Result<Option<String>, CorpusError> {
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for id in members {
        match labels.get(id) {
            Some(Some(b)) => *counts.entry(b).or_default() += 1,
            Some(None) => {}
            None => return Err(CorpusError::LabelMissing(id.clone())),
        }
    }
    // BTreeMap iterates bug ids ascending; keep the first maximum.
    let mut best: Option<(&String, usize)> = None;
    for (b, n) in counts {
        if best.is_none_or(|(_, bn)| n > bn) {
            best = Some((b, n));
        }
    }
    Ok(best.map(|(b, _)| b.clone()))
}
