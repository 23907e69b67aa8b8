//! Crash deduplication by fault signatures.
//!
//! A fault signature is a minimal executable sub-program that still
//! reproduces a crash. Crashes are classified by re-running their inputs on
//! existing signatures, new signatures are generated (trace, slice, reduce)
//! for crashes nothing reproduces, and similar signatures are merged into
//! fault groups. Coverage and stack-hash deduplication baselines, a crash
//! exploration fuzzer and patch-based ground-truth scoring complete the
//! experiment loop.

pub mod baselines;
pub mod corpus;
pub mod minilang;
pub mod pipeline;
pub mod siggen;
pub mod triage;

pub use minilang::{
    execute, parse, parse_executable, render, CallStack, ExecutionOutcome, FailureFingerprint,
    FailureKind, Program, StatementId, Status,
};
pub use siggen::{generate_signature, FaultSignature, ReduceConfig};
pub use triage::{CrashRecord, FaultGroup, TriageConfig};
pub use baselines::DedupReport;
pub use corpus::Metrics;
