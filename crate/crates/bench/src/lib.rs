//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use fuzzeraid_core::minilang::{execute, FailureFingerprint, Program, DEFAULT_STEP_BUDGET};
use fuzzeraid_core::pipeline::{load_fixture, Fixture};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> Fixture {
    load_fixture(&fixtures_dir().join(name)).expect("bundled fixture")
}

/// First seed of the first bug, with its fingerprint.
pub fn crash(f: &Fixture) -> (Program, Vec<u8>, FailureFingerprint) {
    let input = f.bugs[0].seeds[0].clone();
    let fp = execute(&f.program, &input, DEFAULT_STEP_BUDGET)
        .fingerprint()
        .cloned()
        .expect("seed crashes");
    (f.program.clone(), input, fp)
}
