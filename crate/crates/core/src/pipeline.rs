//! Fixture loading and the end-to-end experiment: explore, label, cap,
//! group, merge, score, and the baseline group counts.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{dedup_coverage, dedup_crash_site, dedup_stack_hash};
use crate::corpus::{cap_per_bug, explore, label_with_patches, score, ExploreConfig, GroundTruthLabel, Metrics};
use crate::minilang::{execute, parse_executable, FailureKind, ParseError, Program};
use crate::triage::{group_crashes, merge_groups, CrashRecord, FaultGroup, Grouping, TriageConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("fixture {fixture}: {msg}")]
    Invalid { fixture: String, msg: String },
}

#[derive(Deserialize)]
struct FixtureFile {
    name: String,
    program: String,
    #[serde(default)]
    suite: bool,
    #[serde(default)]
    explore: ExploreSettings,
    #[serde(default = "default_cap")]
    per_bug_cap: usize,
    bugs: Vec<BugFile>,
    #[serde(default)]
    crashes: Vec<CrashFile>,
}

fn default_cap() -> usize {
    250
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreSettings {
    pub iterations: u64,
    pub max_len: usize,
}

impl Default for ExploreSettings {
    fn default() -> Self {
        Self {
            iterations: 1000,
            max_len: 64,
        }
    }
}

#[derive(Deserialize)]
struct BugFile {
    id: String,
    kind: FailureKind,
    patch: String,
    #[serde(default)]
    seeds: Vec<String>,
}

#[derive(Deserialize)]
struct CrashFile {
    id: String,
    input: String,
}

#[derive(Debug, Clone)]
pub struct FixtureBug {
    pub id: String,
    pub kind: FailureKind,
    pub seeds: Vec<Vec<u8>>,
    pub patch: Program,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub dir: PathBuf,
    pub program_path: PathBuf,
    pub program: Program,
    /// Part of the multi-bug evaluation suite (as opposed to a worked example).
    pub suite: bool,
    pub explore: ExploreSettings,
    pub per_bug_cap: usize,
    pub bugs: Vec<FixtureBug>,
    /// Hand-picked crashes, in order.
    pub crashes: Vec<(String, Vec<u8>)>,
}

impl Fixture {
    pub fn patches(&self) -> BTreeMap<String, Program> {
        self.bugs
            .iter()
            .map(|b| (b.id.clone(), b.patch.clone()))
            .collect()
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn program_at(path: &Path) -> Result<Program, PipelineError> {
    parse_executable(&read(path)?).map_err(|source| PipelineError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_fixture(dir: &Path) -> Result<Fixture, PipelineError> {
    let meta_path = dir.join("fixture.json");
    let f: FixtureFile = serde_json::from_str(&read(&meta_path)?).map_err(|source| PipelineError::Json {
        path: meta_path.clone(),
        source,
    })?;
    let program_path = dir.join(&f.program);
    let program = program_at(&program_path)?;
    let mut bugs = Vec::new();
    for b in f.bugs {
        bugs.push(FixtureBug {
            patch: program_at(&dir.join(&b.patch))?,
            id: b.id,
            kind: b.kind,
            seeds: b.seeds.into_iter().map(String::into_bytes).collect(),
        });
    }
    Ok(Fixture {
        name: f.name,
        dir: dir.to_path_buf(),
        program_path,
        program,
        suite: f.suite,
        explore: f.explore,
        per_bug_cap: f.per_bug_cap,
        bugs,
        crashes: f.crashes.into_iter().map(|c| (c.id, c.input.into_bytes())).collect(),
    })
}

/// Every fixture directory under `root`, by directory name.
pub fn load_fixtures(root: &Path) -> Result<Vec<Fixture>, PipelineError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|source| PipelineError::Io {
            path: root.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("fixture.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_fixture(d)).collect()
}

/// Check that every seed crashes the program with its bug's kind and that
/// the bug's own patch removes the crash.
pub fn validate_fixture(f: &Fixture, step_budget: u64) -> Result<(), PipelineError> {
    let invalid = |msg: String| PipelineError::Invalid {
        fixture: f.name.clone(),
        msg,
    };
    for b in &f.bugs {
        for s in &b.seeds {
            let out = execute(&f.program, s, step_budget);
            match out.fingerprint() {
                Some(fp) if fp.kind == b.kind => {}
                other => {
                    return Err(invalid(format!(
                        "seed {:?} of {} gives {:?}",
                        String::from_utf8_lossy(s),
                        b.id,
                        other.map(|f| f.to_string())
                    )))
                }
            }
            if execute(&b.patch, s, step_budget).is_crash() {
                return Err(invalid(format!("patch for {} does not fix its seed", b.id)));
            }
        }
    }
    Ok(())
}

fn records(program: &Program, inputs: Vec<(String, Vec<u8>)>, step_budget: u64) -> Vec<CrashRecord> {
    inputs
        .into_par_iter()
        .filter_map(|(id, input)| {
            let fp = execute(program, &input, step_budget).fingerprint().cloned()?;
            Some(CrashRecord {
                id,
                input,
                original_fingerprint: fp,
                label: None,
            })
        })
        .collect()
}

fn apply_labels(corpus: &mut [CrashRecord], labels: &[GroundTruthLabel]) {
    for (c, l) in corpus.iter_mut().zip(labels) {
        debug_assert_eq!(c.id, l.crash_id);
        c.label = l.bug.clone();
    }
}

/// The hand-picked crashes of a fixture, labelled.
pub fn listed_corpus(f: &Fixture, step_budget: u64) -> Vec<CrashRecord> {
    let mut corpus = records(&f.program, f.crashes.clone(), step_budget);
    let labels = label_with_patches(&corpus, &f.program, &f.patches(), step_budget);
    apply_labels(&mut corpus, &labels);
    corpus
}

/// Explore from every seed of every bug, drop duplicate inputs, renumber,
/// label by patches and cap each label at the fixture's per-bug limit.
pub fn explored_corpus(f: &Fixture, rng_seed: u64, step_budget: u64) -> Vec<CrashRecord> {
    let jobs: Vec<(u64, &[u8])> = f
        .bugs
        .iter()
        .flat_map(|b| b.seeds.iter())
        .enumerate()
        .map(|(k, s)| (k as u64, s.as_slice()))
        .collect();
    let runs: Vec<Vec<CrashRecord>> = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let cfg = ExploreConfig {
                iterations: f.explore.iterations,
                rng_seed: rng_seed.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
                step_budget,
                max_len: f.explore.max_len,
            };
            explore(&f.program, seed, &cfg).unwrap_or_default()
        })
        .collect();
    let mut seen = HashSet::new();
    let mut corpus = Vec::new();
    for r in runs.into_iter().flatten() {
        if seen.insert(r.input.clone()) {
            corpus.push(CrashRecord {
                id: format!("c{:05}", corpus.len()),
                ..r
            });
        }
    }
    let labels = label_with_patches(&corpus, &f.program, &f.patches(), step_budget);
    apply_labels(&mut corpus, &labels);
    cap_per_bug(&corpus, f.per_bug_cap, rng_seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCounts {
    pub afl: usize,
    pub stack1: usize,
    pub stack5: usize,
    pub site: usize,
}

pub fn baseline_counts(corpus: &[CrashRecord], program: &Program, step_budget: u64) -> BaselineCounts {
    BaselineCounts {
        afl: dedup_coverage(corpus, program, step_budget).group_count,
        stack1: dedup_stack_hash(corpus, 1).group_count,
        stack5: dedup_stack_hash(corpus, 5).group_count,
        site: dedup_crash_site(corpus).group_count,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub bugs: usize,
    pub crashes: usize,
    pub signatures: usize,
    pub groups: usize,
    pub baselines: BaselineCounts,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct FixtureRun {
    pub corpus: Vec<CrashRecord>,
    pub grouping: Grouping,
    pub groups: Vec<FaultGroup>,
    pub report: FixtureReport,
}

/// Group a labelled corpus and score it.
pub fn run_on_corpus(f: &Fixture, corpus: Vec<CrashRecord>, config: &TriageConfig) -> FixtureRun {
    let grouping = group_crashes(&corpus, Vec::new(), &f.program, config);
    let groups = merge_groups(&grouping.signatures, config);
    let labels: BTreeMap<String, Option<String>> =
        corpus.iter().map(|c| (c.id.clone(), c.label.clone())).collect();
    let missed: Vec<String> = grouping.missed.iter().map(|m| m.crash_id.clone()).collect();
    let metrics = score(&groups, &grouping.signatures, &labels, &missed)
        .expect("every corpus crash carries a label entry");
    let known: BTreeSet<&String> = corpus.iter().filter_map(|c| c.label.as_ref()).collect();
    let report = FixtureReport {
        name: f.name.clone(),
        bugs: known.len(),
        crashes: corpus.len(),
        signatures: grouping.signatures.len(),
        groups: groups.len(),
        baselines: baseline_counts(&corpus, &f.program, config.step_budget),
        metrics,
    };
    FixtureRun {
        corpus,
        grouping,
        groups,
        report,
    }
}

/// Suite fixtures use an explored corpus; worked examples use their listed
/// crashes. The fixture is validated first.
pub fn run_fixture(
    f: &Fixture,
    rng_seed: u64,
    config: &TriageConfig,
) -> Result<FixtureRun, PipelineError> {
    validate_fixture(f, config.step_budget)?;
    let corpus = if f.suite {
        explored_corpus(f, rng_seed, config.step_budget)
    } else {
        listed_corpus(f, config.step_budget)
    };
    Ok(run_on_corpus(f, corpus, config))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteTotals {
    pub bugs: usize,
    pub crashes: usize,
    pub labelled: usize,
    pub signatures: usize,
    pub groups: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub missed: usize,
    pub unknown: usize,
    pub afl: usize,
    pub stack1: usize,
    pub stack5: usize,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub fixtures: Vec<FixtureReport>,
    pub totals: SuiteTotals,
}

impl SuiteReport {
    pub fn new(fixtures: Vec<FixtureReport>) -> Self {
        let mut t = SuiteTotals::default();
        for f in &fixtures {
            t.bugs += f.bugs;
            t.crashes += f.crashes;
            t.labelled += f.metrics.totals.crashes;
            t.signatures += f.signatures;
            t.groups += f.groups;
            t.correct += f.metrics.totals.correct;
            t.incorrect += f.metrics.totals.incorrect;
            t.missed += f.metrics.totals.missed;
            t.unknown += f.metrics.unknown.crashes;
            t.afl += f.baselines.afl;
            t.stack1 += f.baselines.stack1;
            t.stack5 += f.baselines.stack5;
            t.site += f.baselines.site;
        }
        Self { fixtures, totals: t }
    }
}
