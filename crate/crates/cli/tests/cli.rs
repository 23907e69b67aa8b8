use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn run(args: &[&str]) -> Output {
    run_env(args, None)
}

fn run_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fuzzeraid"));
    cmd.args(args).env_remove("FUZZERAID_SEED");
    if let Some(s) = seed {
        cmd.env("FUZZERAID_SEED", s);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Explore fig2 from one seed into `dir/corpus`.
fn explore_fig2(dir: &Path, seed: &[u8], rng: &str) -> PathBuf {
    let seed_file = dir.join("seed.bin");
    fs::write(&seed_file, seed).unwrap();
    let corpus = dir.join("corpus");
    let program = fixture("fig2/program.ml-src");
    ok(&[
        "explore", "--program", p(&program), "--seed-input", p(&seed_file),
        "--iters", "150", "--rng", rng, "--out", p(&corpus),
    ]);
    corpus
}

#[test]
fn explore_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = explore_fig2(dir.path(), b"api8g", "3");
    let manifest = json(&corpus.join("manifest.json"));
    let entries = manifest.as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        let id = e["id"].as_str().unwrap();
        assert!(corpus.join("inputs").join(format!("{id}.bin")).exists());
    }
}

#[test]
fn explore_rejects_bad_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let program = fixture("fig2/program.ml-src");
    let out = run(&["explore", "--program", p(&program), "--out", p(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));

    let benign = dir.path().join("benign.bin");
    fs::write(&benign, b"zzzz").unwrap();
    let out = run(&[
        "explore", "--program", p(&program), "--seed-input", p(&benign),
        "--out", p(&dir.path().join("c")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed input does not crash program"));
}

#[test]
fn rng_seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let seed_file = dir.path().join("seed.bin");
    fs::write(&seed_file, b"api8g").unwrap();
    let program = fixture("fig2/program.ml-src");
    let manifest = |name: &str, rng: &str, env: Option<&str>| {
        let out = dir.path().join(name);
        let st = run_env(
            &[
                "explore", "--program", p(&program), "--seed-input", p(&seed_file),
                "--iters", "150", "--rng", rng, "--out", p(&out),
            ],
            env,
        );
        assert!(st.status.success());
        fs::read_to_string(out.join("manifest.json")).unwrap()
    };
    let a = manifest("a", "1", Some("42"));
    let b = manifest("b", "9", Some("42"));
    let c = manifest("c", "42", None);
    assert_eq!(a, b);
    assert_eq!(a, c);

    let bad = run_env(
        &["explore", "--program", p(&program), "--seed-input", p(&seed_file), "--out", p(&dir.path().join("d"))],
        Some("x"),
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn group_label_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = explore_fig2(dir.path(), b"bqpi8g", "5");
    let program = fixture("fig2/program.ml-src");
    let out = dir.path().join("run");
    ok(&["group", "--corpus", p(&corpus), "--program", p(&program), "--out", p(&out)]);

    // groups and missed partition the manifest
    let ids: BTreeSet<String> = json(&corpus.join("manifest.json"))
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["id"].as_str().unwrap().to_string())
        .collect();
    let mut seen = BTreeSet::new();
    for g in json(&out.join("groups.json")).as_array().unwrap() {
        for c in g["crash_ids"].as_array().unwrap() {
            assert!(seen.insert(c.as_str().unwrap().to_string()));
        }
    }
    for m in json(&out.join("missed.json")).as_array().unwrap() {
        assert!(seen.insert(m["crash_id"].as_str().unwrap().to_string()));
    }
    assert_eq!(seen, ids);

    let labels = dir.path().join("labels.json");
    let b1 = format!("bug1={}", p(&fixture("fig2/patches/bug1.ml-src")));
    let b2 = format!("bug2={}", p(&fixture("fig2/patches/bug2.ml-src")));
    ok(&[
        "label", "--corpus", p(&corpus), "--program", p(&program),
        "--patch", &b1, "--patch", &b2, "--out", p(&labels),
    ]);

    let report = |format: &str| {
        ok(&[
            "report", "--groups", p(&out.join("groups.json")), "--labels", p(&labels),
            "--missed", p(&out.join("missed.json")), "--signatures", p(&out.join("signatures")),
            "--format", format,
        ])
    };
    let from_json: Vec<Vec<String>> = serde_json::from_str::<Value>(&report("json"))
        .unwrap()
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            ["bug", "crashes", "fault_sigs", "groups", "correct", "incorrect", "missed"]
                .iter()
                .map(|k| match &r[*k] {
                    Value::String(s) => s.clone(),
                    v => v.to_string(),
                })
                .collect()
        })
        .collect();
    let csv = report("csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bug,crashes,fault_sigs,groups,correct,incorrect,missed"));
    let from_csv: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(from_json, from_csv);
    let total = from_csv.last().unwrap();
    assert_eq!(total[0], "total");
    assert_eq!(total[1], ids.len().to_string());
    assert_eq!(total[5], "0");

    let v = ok(&["validate", "--signatures", p(&out.join("signatures"))]);
    assert!(v.lines().all(|l| l.ends_with(": ok")), "{v}");
}

#[test]
fn seeded_rerun_adds_no_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = explore_fig2(dir.path(), b"nxyz", "2");
    let program = fixture("fig2/program.ml-src");
    let first = dir.path().join("first");
    ok(&["group", "--corpus", p(&corpus), "--program", p(&program), "--out", p(&first)]);
    let second = dir.path().join("second");
    let stdout = ok(&[
        "group", "--corpus", p(&corpus), "--program", p(&program),
        "--seed-signatures", p(&first.join("signatures")), "--out", p(&second),
    ]);
    assert!(stdout.contains(" 0 new signatures"), "{stdout}");
    assert_eq!(
        fs::read_to_string(first.join("groups.json")).unwrap(),
        fs::read_to_string(second.join("groups.json")).unwrap()
    );
}

#[test]
fn baselines_print_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = explore_fig2(dir.path(), b"api8g", "4");
    let program = fixture("fig2/program.ml-src");
    for mode in ["afl", "stack:1", "stack:5", "site"] {
        let stdout = ok(&["baseline", "--corpus", p(&corpus), "--program", p(&program), "--mode", mode]);
        let v: Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["group_count"].as_u64().unwrap() as usize, v["groups"].as_array().unwrap().len());
    }
    let bad = run(&["baseline", "--corpus", p(&corpus), "--program", p(&program), "--mode", "stack:0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn group_rejects_out_of_range_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = explore_fig2(dir.path(), b"api8g", "4");
    let program = fixture("fig2/program.ml-src");
    let out = run(&[
        "group", "--corpus", p(&corpus), "--program", p(&program),
        "--out", p(&dir.path().join("o")), "--threshold", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
