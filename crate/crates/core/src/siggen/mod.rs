//! Fault signatures: the smallest executable sub-program that still fails the
//! same way as a given crash.

mod reduce;
mod remap;
mod slice;
mod store;

use thiserror::Error;

use crate::minilang::{execute, FailureFingerprint, Program, Status};

pub use reduce::{
    admissible, check_one_minimal, delete_nodes, project, reduce, splice, splice_options,
    MinimalityViolation, ReduceConfig, Reduction, Splice, DEFAULT_MAX_ORACLE_RUNS,
    EXHAUSTIVE_LIMIT,
};
pub use remap::fingerprint_remap;
pub use slice::slice_program;
pub use store::{load_signatures, save_signatures, StoreError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SiggenError {
    #[error("input does not crash the program")]
    NotACrash,
    #[error("sliced program does not reproduce the crash")]
    SliceNotReproducing,
    #[error("candidate does not reproduce the target failure")]
    NotReproducing,
    #[error("frame {function}:{line} has no counterpart")]
    UnmappableFrame { function: String, line: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSignature {
    pub id: String,
    pub program: Program,
    pub origin_crash: String,
    pub origin_input: Vec<u8>,
    /// Failure of `program` on `origin_input`, in `program`'s own lines.
    pub reference_fingerprint: FailureFingerprint,
    /// Crash ids matched by this signature, in the order they joined.
    pub members: Vec<String>,
    pub minimal: bool,
    pub oracle_runs: u64,
}

impl FaultSignature {
    pub fn add_member(&mut self, crash_id: &str) {
        if !self.members.iter().any(|m| m == crash_id) {
            self.members.push(crash_id.to_string());
        }
    }
}

/// Zero-padded identifier so lexical and creation order agree.
pub fn signature_id(n: usize) -> String {
    format!("{n:04}")
}

pub fn generate_signature(
    original: &Program,
    crash_input: &[u8],
    crash_id: &str,
    sig_id: &str,
    config: &ReduceConfig,
) -> Result<FaultSignature, SiggenError> {
    let run = execute(original, crash_input, config.step_budget);
    let Status::Crashed(fp) = &run.status else {
        return Err(SiggenError::NotACrash);
    };
    let sliced = slice_program(original, &run.trace);
    let target =
        fingerprint_remap(fp, original, &sliced).map_err(|_| SiggenError::SliceNotReproducing)?;
    if execute(&sliced, crash_input, config.step_budget).fingerprint() != Some(&target) {
        return Err(SiggenError::SliceNotReproducing);
    }
    let red = reduce(&sliced, crash_input, &target, config)?;
    log::debug!(
        "signature {sig_id} from {crash_id}: {} -> {} statements, {} oracle runs",
        original.statement_count(),
        red.program.statement_count(),
        red.oracle_runs
    );
    Ok(FaultSignature {
        id: sig_id.to_string(),
        program: red.program,
        origin_crash: crash_id.to_string(),
        origin_input: crash_input.to_vec(),
        reference_fingerprint: red.fingerprint,
        members: vec![crash_id.to_string()],
        minimal: red.minimal,
        oracle_runs: red.oracle_runs,
    })
}
