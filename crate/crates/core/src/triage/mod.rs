//! Crash classification against existing signatures, the grouping loop, and
//! similarity-based merging of signatures into fault groups.

mod similarity;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::minilang::{execute, render, ExecutionOutcome, FailureFingerprint, Program};
use crate::siggen::{generate_signature, signature_id, FaultSignature, ReduceConfig};

pub use similarity::{sim_call, sim_text, DistanceUnit};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRecord {
    pub id: String,
    #[serde(skip)]
    pub input: Vec<u8>,
    pub original_fingerprint: FailureFingerprint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultGroup {
    pub id: String,
    pub signatures: Vec<String>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageConfig {
    pub threshold: f64,
    pub step_budget: u64,
    pub retries: u32,
    pub edit_cost: u32,
    pub max_oracle_runs: u64,
    pub distance_unit: DistanceUnit,
}

impl Default for TriageConfig {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            step_budget: crate::minilang::DEFAULT_STEP_BUDGET,
            retries: 10,
            edit_cost: 1,
            max_oracle_runs: crate::siggen::DEFAULT_MAX_ORACLE_RUNS,
            distance_unit: DistanceUnit::Lines,
        }
    }
}

impl TriageConfig {
    pub fn reduce_config(&self) -> ReduceConfig {
        ReduceConfig {
            step_budget: self.step_budget,
            max_oracle_runs: self.max_oracle_runs,
        }
    }
}

/// Something that can execute a program on an input. Only nondeterministic
/// runners get more than one attempt per signature.
pub trait Runner: Sync {
    fn run(&self, program: &Program, input: &[u8], step_budget: u64) -> ExecutionOutcome;

    fn deterministic(&self) -> bool {
        true
    }
}

/// The mini-language interpreter.
#[derive(Debug, Clone, Copy, Default)]
pub struct Interpreter;

impl Runner for Interpreter {
    fn run(&self, program: &Program, input: &[u8], step_budget: u64) -> ExecutionOutcome {
        execute(program, input, step_budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Matched(String),
    Unmatched,
}

/// Does `input` make `sig` fail exactly as its origin crash did?
pub fn reproduces(runner: &dyn Runner, sig: &FaultSignature, input: &[u8], config: &TriageConfig) -> bool {
    let attempts = if runner.deterministic() {
        1
    } else {
        config.retries.max(1)
    };
    (0..attempts).any(|_| {
        runner.run(&sig.program, input, config.step_budget).fingerprint()
            == Some(&sig.reference_fingerprint)
    })
}

pub fn classify(crash: &CrashRecord, signatures: &[FaultSignature], config: &TriageConfig) -> Classification {
    classify_with(&Interpreter, &crash.input, signatures, config)
}

/// First signature in creation order that the input reproduces.
pub fn classify_with(
    runner: &dyn Runner,
    input: &[u8],
    signatures: &[FaultSignature],
    config: &TriageConfig,
) -> Classification {
    match signatures
        .par_iter()
        .position_first(|s| reproduces(runner, s, input, config))
    {
        Some(i) => Classification::Matched(signatures[i].id.clone()),
        None => Classification::Unmatched,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissedCrash {
    pub crash_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub signatures: Vec<FaultSignature>,
    pub missed: Vec<MissedCrash>,
}

/// Process crashes in corpus order: join the first reproducing signature, or
/// generate a new one. A crash whose generation fails twice is missed.
pub fn group_crashes(
    corpus: &[CrashRecord],
    seed_signatures: Vec<FaultSignature>,
    original: &Program,
    config: &TriageConfig,
) -> Grouping {
    let mut signatures = seed_signatures;
    let mut missed = Vec::new();
    let reduce_cfg = config.reduce_config();
    let mut next_id = signatures
        .iter()
        .filter_map(|s| s.id.parse::<usize>().ok())
        .map(|n| n + 1)
        .max()
        .unwrap_or(0);
    for crash in corpus {
        if let Classification::Matched(id) = classify_with(&Interpreter, &crash.input, &signatures, config) {
            let sig = signatures.iter_mut().find(|s| s.id == id).expect("matched id exists");
            sig.add_member(&crash.id);
            continue;
        }
        let sid = signature_id(next_id);
        let attempt = || generate_signature(original, &crash.input, &crash.id, &sid, &reduce_cfg);
        match attempt().or_else(|e| {
            log::warn!("signature generation for {} failed ({e}); retrying", crash.id);
            attempt()
        }) {
            Ok(sig) => {
                log::info!(
                    "crash {} -> new signature {} ({} statements)",
                    crash.id,
                    sig.id,
                    sig.program.statement_count()
                );
                signatures.push(sig);
                next_id += 1;
            }
            Err(e) => missed.push(MissedCrash {
                crash_id: crash.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Grouping { signatures, missed }
}

/// Mean of textual and call-stack similarity.
pub fn sim_score(a: &FaultSignature, b: &FaultSignature, config: &TriageConfig) -> f64 {
    let text = sim_text(&render(&a.program), &render(&b.program), config.distance_unit, config.edit_cost);
    let call = sim_call(&a.reference_fingerprint.stack, &b.reference_fingerprint.stack);
    (text + call) / 2.0
}

pub fn sim_sig(a: &FaultSignature, b: &FaultSignature, config: &TriageConfig) -> f64 {
    sim_text(&render(&a.program), &render(&b.program), config.distance_unit, config.edit_cost)
}

/// Greedy seed-relative clustering: the first remaining signature collects
/// every later one scoring at least the threshold against it.
pub fn merge_groups(signatures: &[FaultSignature], config: &TriageConfig) -> Vec<FaultGroup> {
    let renders: Vec<String> = signatures.iter().map(|s| render(&s.program)).collect();
    let score = |i: usize, j: usize| {
        let text = sim_text(&renders[i], &renders[j], config.distance_unit, config.edit_cost);
        let call = sim_call(
            &signatures[i].reference_fingerprint.stack,
            &signatures[j].reference_fingerprint.stack,
        );
        (text + call) / 2.0
    };
    let mut worklist: Vec<usize> = (0..signatures.len()).collect();
    let mut groups = Vec::new();
    while !worklist.is_empty() {
        let seed = worklist.remove(0);
        let hits: Vec<bool> = worklist
            .par_iter()
            .map(|&j| score(seed, j) >= config.threshold)
            .collect();
        let mut taken = Vec::new();
        let mut rest = Vec::new();
        for (&j, hit) in worklist.iter().zip(hits) {
            if hit {
                taken.push(j);
            } else {
                rest.push(j);
            }
        }
        worklist = rest;
        let mut sigs = vec![seed];
        sigs.extend(taken);
        let mut members = Vec::new();
        let mut seen = BTreeSet::new();
        for &i in &sigs {
            for m in &signatures[i].members {
                if seen.insert(m.clone()) {
                    members.push(m.clone());
                }
            }
        }
        groups.push(FaultGroup {
            id: format!("{:04}", groups.len()),
            signatures: sigs.iter().map(|&i| signatures[i].id.clone()).collect(),
            members,
        });
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group_id: String,
    pub signature_ids: Vec<String>,
    pub crash_ids: Vec<String>,
}

/// Serializable form of the groups; with `corpus` set, members outside it
/// (e.g. from seed signatures) are left out.
pub fn group_entries(groups: &[FaultGroup], corpus: Option<&BTreeSet<String>>) -> Vec<GroupEntry> {
    groups
        .iter()
        .map(|g| GroupEntry {
            group_id: g.id.clone(),
            signature_ids: g.signatures.clone(),
            crash_ids: g
                .members
                .iter()
                .filter(|m| corpus.is_none_or(|c| c.contains(*m)))
                .cloned()
                .collect(),
        })
        .collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}

pub fn read_groups(path: &Path) -> io::Result<Vec<GroupEntry>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
