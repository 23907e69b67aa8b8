//! Conventional deduplication strategies: coverage-based minimization,
//! call-stack hashing and crash-site keying.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::minilang::{bucket_edges, execute, Program};
use crate::triage::CrashRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupGroup {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub strategy: String,
    pub groups: Vec<DedupGroup>,
    pub group_count: usize,
}

impl DedupReport {
    fn new(strategy: String, groups: Vec<DedupGroup>) -> Self {
        Self {
            strategy,
            group_count: groups.len(),
            groups,
        }
    }
}

/// Greedy set cover over bucketed edge coverage. Selected crashes become
/// representatives; every other crash joins the first representative whose
/// coverage contains its own, or forms a group by itself.
pub fn dedup_coverage(corpus: &[CrashRecord], original: &Program, step_budget: u64) -> DedupReport {
    let raw: Vec<_> = corpus
        .par_iter()
        .map(|c| bucket_edges(&execute(original, &c.input, step_budget).edges))
        .collect();
    let mut intern = HashMap::new();
    let cov: Vec<BTreeSet<u32>> = raw
        .into_iter()
        .map(|points| {
            points
                .into_iter()
                .map(|p| {
                    let n = intern.len() as u32;
                    *intern.entry(p).or_insert(n)
                })
                .collect()
        })
        .collect();

    let mut covered: BTreeSet<u32> = BTreeSet::new();
    let mut selected: Vec<usize> = Vec::new();
    let mut is_selected = vec![false; corpus.len()];
    loop {
        let best = (0..corpus.len())
            .filter(|&i| !is_selected[i])
            .map(|i| (cov[i].difference(&covered).count(), i))
            .filter(|&(gain, _)| gain > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| corpus[b.1].id.cmp(&corpus[a.1].id)));
        let Some((_, i)) = best else { break };
        covered.extend(cov[i].iter().copied());
        selected.push(i);
        is_selected[i] = true;
    }

    let mut groups: Vec<(usize, Vec<usize>)> = selected.iter().map(|&i| (i, vec![])).collect();
    for i in 0..corpus.len() {
        if is_selected[i] {
            let g = groups.iter_mut().find(|(r, _)| *r == i).expect("selected");
            g.1.push(i);
            continue;
        }
        match groups
            .iter_mut()
            .take(selected.len())
            .find(|(r, _)| cov[*r].is_superset(&cov[i]))
        {
            Some(g) => g.1.push(i),
            None => groups.push((i, vec![i])),
        }
    }
    let groups = groups
        .into_iter()
        .map(|(r, mut m)| {
            m.sort_unstable();
            DedupGroup {
                representative: corpus[r].id.clone(),
                members: m.into_iter().map(|i| corpus[i].id.clone()).collect(),
            }
        })
        .collect();
    DedupReport::new("afl".into(), groups)
}

/// Group by the innermost `n_frames` function names of the original stack.
pub fn dedup_stack_hash(corpus: &[CrashRecord], n_frames: usize) -> DedupReport {
    let n = n_frames.max(1);
    let groups = group_by_key(corpus, |c| {
        c.original_fingerprint
            .stack
            .innermost(n)
            .into_iter()
            .map(str::to_string)
            .collect::<Vec<_>>()
    });
    DedupReport::new(format!("stack:{n}"), groups)
}

pub const CRASH_SITE_FRAMES: usize = 7;

/// Group by failure kind, location and the innermost seven function names.
pub fn dedup_crash_site(corpus: &[CrashRecord]) -> DedupReport {
    let groups = group_by_key(corpus, |c| {
        let fp = &c.original_fingerprint;
        let frames: Vec<String> = fp
            .stack
            .innermost(CRASH_SITE_FRAMES)
            .into_iter()
            .map(str::to_string)
            .collect();
        (fp.kind, fp.location.clone(), frames)
    });
    DedupReport::new("site".into(), groups)
}

fn group_by_key<K: Ord>(corpus: &[CrashRecord], key: impl Fn(&CrashRecord) -> K) -> Vec<DedupGroup> {
    let mut index: BTreeMap<K, usize> = BTreeMap::new();
    let mut groups: Vec<DedupGroup> = Vec::new();
    for c in corpus {
        let k = key(c);
        match index.get(&k) {
            Some(&g) => groups[g].members.push(c.id.clone()),
            None => {
                index.insert(k, groups.len());
                groups.push(DedupGroup {
                    representative: c.id.clone(),
                    members: vec![c.id.clone()],
                });
            }
        }
    }
    groups
}

/// Baseline selection as written on the command line: `afl`, `stack:N` or
/// `site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Coverage,
    StackHash(usize),
    CrashSite,
}

impl std::str::FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "afl" => Ok(Self::Coverage),
            "site" => Ok(Self::CrashSite),
            _ => match s.strip_prefix("stack:").map(str::parse::<usize>) {
                Some(Ok(n)) if n >= 1 => Ok(Self::StackHash(n)),
                _ => Err(format!("unknown baseline mode `{s}` (expected afl, stack:N or site)")),
            },
        }
    }
}

pub fn run_baseline(
    mode: BaselineMode,
    corpus: &[CrashRecord],
    original: &Program,
    step_budget: u64,
) -> DedupReport {
    match mode {
        BaselineMode::Coverage => dedup_coverage(corpus, original, step_budget),
        BaselineMode::StackHash(n) => dedup_stack_hash(corpus, n),
        BaselineMode::CrashSite => dedup_crash_site(corpus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse_executable;

    fn records(p: &Program, inputs: &[(&str, &[u8])]) -> Vec<CrashRecord> {
        inputs
            .iter()
            .map(|(id, inp)| CrashRecord {
                id: id.to_string(),
                input: inp.to_vec(),
                original_fingerprint: execute(p, inp, 10_000).fingerprint().cloned().unwrap(),
                label: None,
            })
            .collect()
    }

    fn fig1() -> Program {
        parse_executable(
            "fn bug() { ptr p = null; int v = *p; return v; }
             fn main() { int c = input(0); if (c == 'a') { bug(); } else { bug(); } c = 0; return c; }",
        )
        .unwrap()
    }

    #[test]
    fn coverage_splits_fig1_paths() {
        let p = fig1();
        let c = records(&p, &[("c1", b"axx"), ("c2", b"bxx")]);
        let r = dedup_coverage(&c, &p, 10_000);
        assert_eq!(r.group_count, 2);
        let same = records(&p, &[("c1", b"axx"), ("c2", b"axx")]);
        assert_eq!(dedup_coverage(&same, &p, 10_000).group_count, 1);
    }

    #[test]
    fn nested_coverage_has_one_representative() {
        let p = parse_executable(
            "fn main() { int a = input(0); assert(a != 'q'); int b = input(1); assert(b != 'q'); assert(0); }",
        )
        .unwrap();
        let c = records(&p, &[("c3", b"q"), ("c1", b"aa"), ("c2", b"aq")]);
        let r = dedup_coverage(&c, &p, 10_000);
        assert_eq!(r.group_count, 1);
        assert_eq!(r.groups[0].representative, "c1");
        assert_eq!(r.groups[0].members, ["c3", "c1", "c2"]);
    }

    #[test]
    fn stack_hash_ignores_lines() {
        let p = parse_executable(
            "fn f(x) { if (x == 'a') { assert(0); } int y = 1; assert(0); } fn main() { f(input(0)); }",
        )
        .unwrap();
        let c = records(&p, &[("c1", b"a"), ("c2", b"b")]);
        assert_eq!(dedup_stack_hash(&c, 1).group_count, 1);
        assert_eq!(dedup_crash_site(&c).group_count, 2);
    }

    #[test]
    fn site_separates_kinds_at_same_location() {
        let p = parse_executable(
            "fn main() { ptr p = null; if (input(0) == 'u') { array[1] a; p = a; free(p); } int v = *p; }",
        )
        .unwrap();
        let c = records(&p, &[("n", b"x"), ("u", b"u")]);
        assert_eq!(c[0].original_fingerprint.location, c[1].original_fingerprint.location);
        assert_eq!(dedup_crash_site(&c).group_count, 2);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("afl".parse(), Ok(BaselineMode::Coverage));
        assert_eq!("stack:5".parse(), Ok(BaselineMode::StackHash(5)));
        assert_eq!("site".parse(), Ok(BaselineMode::CrashSite));
        assert!("stack:0".parse::<BaselineMode>().is_err());
        assert!("bff".parse::<BaselineMode>().is_err());
    }
}
