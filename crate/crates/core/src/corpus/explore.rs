use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::minilang::{bucket_edges, execute, Edge, Program};
use crate::triage::CrashRecord;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreConfig {
    pub iterations: u64,
    pub rng_seed: u64,
    pub step_budget: u64,
    /// Mutants are never extended past this many bytes.
    pub max_len: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            rng_seed: 0,
            step_budget: crate::minilang::DEFAULT_STEP_BUDGET,
            max_len: 64,
        }
    }
}

/// Byte values worth trying: every literal in the program that fits in a
/// byte, plus the boundaries.
pub fn dictionary(program: &Program) -> Vec<u8> {
    let mut set = BTreeSet::from([0u8, 1, 0x7f, 0xff]);
    for (_, s) in program.statements() {
        for e in s.own_exprs() {
            e.for_each_literal(&mut |v| {
                if let Ok(b) = u8::try_from(v) {
                    set.insert(b);
                }
            });
        }
    }
    set.into_iter().collect()
}

/// Crash exploration: mutate crashing inputs, keep mutants that still crash,
/// and queue those that reach new bucketed edge coverage. Records are in
/// discovery order with ids `x00000`, `x00001`, ...; the seed comes first.
pub fn explore(
    original: &Program,
    seed_input: &[u8],
    config: &ExploreConfig,
) -> Result<Vec<CrashRecord>, CorpusError> {
    let first = execute(original, seed_input, config.step_budget);
    let Some(fp) = first.fingerprint().cloned() else {
        return Err(CorpusError::SeedNotCrashing);
    };
    let dict = dictionary(original);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seen_points: HashSet<(Edge, u8)> = bucket_edges(&first.edges).into_iter().collect();
    let mut queue: Vec<Vec<u8>> = vec![seed_input.to_vec()];
    let mut seen_inputs: HashSet<Vec<u8>> = HashSet::from([seed_input.to_vec()]);
    let mut out = vec![record(0, seed_input, fp)];

    for _ in 0..config.iterations {
        let parent = queue.choose(&mut rng).expect("queue is never empty").clone();
        let mutant = mutate(&parent, &queue, &dict, config.max_len, &mut rng);
        if seen_inputs.contains(&mutant) {
            continue;
        }
        let run = execute(original, &mutant, config.step_budget);
        let Some(fp) = run.fingerprint().cloned() else {
            continue;
        };
        seen_inputs.insert(mutant.clone());
        let mut novel = false;
        for p in bucket_edges(&run.edges) {
            novel |= seen_points.insert(p);
        }
        if novel {
            queue.push(mutant.clone());
        }
        out.push(record(out.len(), &mutant, fp));
    }
    Ok(out)
}

fn record(n: usize, input: &[u8], fp: crate::minilang::FailureFingerprint) -> CrashRecord {
    CrashRecord {
        id: format!("x{n:05}"),
        input: input.to_vec(),
        original_fingerprint: fp,
        label: None,
    }
}

fn byte(dict: &[u8], rng: &mut ChaCha8Rng) -> u8 {
    if rng.gen_bool(0.5) {
        *dict.choose(rng).expect("dictionary is never empty")
    } else {
        rng.gen()
    }
}

fn mutate(
    parent: &[u8],
    queue: &[Vec<u8>],
    dict: &[u8],
    max_len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    let mut m = parent.to_vec();
    match rng.gen_range(0..5) {
        0 if !m.is_empty() => {
            let i = rng.gen_range(0..m.len());
            m[i] ^= 1 << rng.gen_range(0..8);
        }
        1 if !m.is_empty() => {
            let i = rng.gen_range(0..m.len());
            m[i] = byte(dict, rng);
        }
        2 if m.len() > 1 => {
            let n = rng.gen_range(1..m.len());
            m.truncate(n);
        }
        3 | 0 | 1 | 2 => {
            let n = rng.gen_range(1..=4);
            for _ in 0..n {
                if m.len() < max_len {
                    m.push(byte(dict, rng));
                }
            }
        }
        _ => {
            let other = queue.choose(rng).expect("queue is never empty");
            let cut_a = rng.gen_range(0..=m.len());
            let cut_b = rng.gen_range(0..=other.len());
            m.truncate(cut_a);
            m.extend_from_slice(&other[cut_b..]);
            m.truncate(max_len);
        }
    }
    m
}
