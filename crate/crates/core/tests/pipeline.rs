use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fuzzeraid_core::corpus::{explore, label_with_patches, score_partition, ExploreConfig};
use fuzzeraid_core::minilang::{parse_executable, DEFAULT_STEP_BUDGET};
use fuzzeraid_core::pipeline::{listed_corpus, load_fixture, load_fixtures, validate_fixture, Fixture};
use fuzzeraid_core::siggen::{load_signatures, save_signatures};
use fuzzeraid_core::triage::{group_crashes, merge_groups, sim_score};
use fuzzeraid_core::TriageConfig;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> Fixture {
    load_fixture(&fixtures().join(name)).unwrap()
}

#[test]
fn every_fixture_seed_crashes_as_documented() {
    let all = load_fixtures(&fixtures()).unwrap();
    assert!(all.iter().filter(|f| f.suite).count() >= 6);
    for f in &all {
        validate_fixture(f, DEFAULT_STEP_BUDGET).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn fig1_crashes_share_one_signature() {
    let f = fixture("fig1");
    let corpus = listed_corpus(&f, DEFAULT_STEP_BUDGET);
    let cfg = TriageConfig::default();
    let g = group_crashes(&corpus, Vec::new(), &f.program, &cfg);
    assert_eq!(g.signatures.len(), 1);
    assert_eq!(g.signatures[0].members, ["crash1", "crash2"]);
    assert!(g.missed.is_empty());
}

#[test]
fn fig2_merges_the_first_bug_only() {
    let f = fixture("fig2");
    let corpus = listed_corpus(&f, DEFAULT_STEP_BUDGET);
    let cfg = TriageConfig::default();
    let g = group_crashes(&corpus, Vec::new(), &f.program, &cfg);
    assert_eq!(g.signatures.len(), 3);
    let [s1, s2, s3] = [&g.signatures[0], &g.signatures[1], &g.signatures[2]];
    assert!(sim_score(s1, s2, &cfg) >= cfg.threshold);
    assert!(sim_score(s1, s3, &cfg) < cfg.threshold);
    let groups = merge_groups(&g.signatures, &cfg);
    let sigs: Vec<&[String]> = groups.iter().map(|g| g.signatures.as_slice()).collect();
    assert_eq!(sigs, [&["0000", "0001"][..], &["0002"][..]]);

    let labels: BTreeMap<String, Option<String>> =
        corpus.iter().map(|c| (c.id.clone(), c.label.clone())).collect();
    let parts: Vec<&[String]> = groups.iter().map(|g| g.members.as_slice()).collect();
    let m = score_partition(&parts, &labels, &[]).unwrap();
    assert_eq!(m.per_bug.len(), 2);
    assert_eq!(m.totals.incorrect, 0);
    assert!(m.per_bug.values().all(|b| b.group_count == 1));
}

#[test]
fn stored_signatures_classify_a_later_campaign() {
    let f = fixture("fig1");
    let cfg = TriageConfig::default();
    let first = group_crashes(&listed_corpus(&f, DEFAULT_STEP_BUDGET), Vec::new(), &f.program, &cfg);
    let dir = tempfile::tempdir().unwrap();
    save_signatures(dir.path(), &first.signatures).unwrap();
    let seeds = load_signatures(dir.path()).unwrap();

    let ecfg = ExploreConfig {
        iterations: 200,
        rng_seed: 99,
        ..ExploreConfig::default()
    };
    let fresh = explore(&f.program, b"bxx", &ecfg).unwrap();
    let again = group_crashes(&fresh, seeds.clone(), &f.program, &cfg);
    assert_eq!(again.signatures.len(), seeds.len());
    assert_eq!(again.signatures[0].members.len(), 2 + fresh.len());
    assert!(again.missed.is_empty());

    assert_eq!(group_crashes(&[], seeds.clone(), &f.program, &cfg).signatures, seeds);
}

#[test]
fn exploration_reaches_both_fig1_paths() {
    let f = fixture("fig1");
    let ecfg = ExploreConfig {
        iterations: 1000,
        rng_seed: 7,
        ..ExploreConfig::default()
    };
    let corpus = explore(&f.program, b"axx", &ecfg).unwrap();
    assert!(corpus.iter().any(|c| c.input.first() == Some(&b'a')));
    assert!(corpus.iter().any(|c| c.input.first() != Some(&b'a')));

    let none = ExploreConfig {
        iterations: 0,
        ..ExploreConfig::default()
    };
    let only_seed = explore(&f.program, b"axx", &none).unwrap();
    assert_eq!(only_seed.len(), 1);
    assert_eq!(only_seed[0].input, b"axx");
}

#[test]
fn crash_fixed_by_two_patches_is_unknown() {
    let f = fixture("fig1");
    let corpus = listed_corpus(&f, DEFAULT_STEP_BUDGET);
    let fix = f.bugs[0].patch.clone();
    let no_fix = parse_executable(&fuzzeraid_core::render(&f.program)).unwrap();
    let patches = BTreeMap::from([
        ("a".to_string(), fix.clone()),
        ("b".to_string(), fix),
        ("c".to_string(), no_fix),
    ]);
    let labels = label_with_patches(&corpus, &f.program, &patches, DEFAULT_STEP_BUDGET);
    assert!(labels.iter().all(|l| l.bug.is_none()));
}

#[test]
fn perfect_grouping_scores_cleanly() {
    let f = fixture("fig2");
    let corpus = listed_corpus(&f, DEFAULT_STEP_BUDGET);
    let labels: BTreeMap<String, Option<String>> =
        corpus.iter().map(|c| (c.id.clone(), c.label.clone())).collect();
    let mut by_bug: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for c in &corpus {
        by_bug.entry(c.label.as_deref().unwrap()).or_default().push(c.id.clone());
    }
    let parts: Vec<&[String]> = by_bug.values().map(Vec::as_slice).collect();
    let m = score_partition(&parts, &labels, &[]).unwrap();
    assert_eq!(m.totals.incorrect, 0);
    assert_eq!(m.totals.correct, corpus.len());
    let counts: BTreeSet<usize> = m.per_bug.values().map(|b| b.group_count).collect();
    assert_eq!(counts, BTreeSet::from([1]));
}
