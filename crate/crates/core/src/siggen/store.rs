use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{parse_executable, render, FailureFingerprint, ParseError};

use super::FaultSignature;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: bad hex input")]
    Hex { path: PathBuf },
}

#[derive(Serialize, Deserialize)]
struct Meta {
    id: String,
    origin_crash: String,
    origin_input: String,
    reference_fingerprint: FailureFingerprint,
    members: Vec<String>,
    minimal: bool,
    oracle_runs: u64,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `sig_<id>.ml-src` and `sig_<id>.json` for every signature.
pub fn save_signatures(dir: &Path, sigs: &[FaultSignature]) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    for s in sigs {
        let src = dir.join(format!("sig_{}.ml-src", s.id));
        fs::write(&src, render(&s.program)).map_err(io(&src))?;
        let meta = Meta {
            id: s.id.clone(),
            origin_crash: s.origin_crash.clone(),
            origin_input: hex::encode(&s.origin_input),
            reference_fingerprint: s.reference_fingerprint.clone(),
            members: s.members.clone(),
            minimal: s.minimal,
            oracle_runs: s.oracle_runs,
        };
        let json = dir.join(format!("sig_{}.json", s.id));
        let text = serde_json::to_string_pretty(&meta).expect("signature metadata serializes");
        fs::write(&json, text + "\n").map_err(io(&json))?;
    }
    Ok(())
}

/// Load every signature in `dir`, ordered by id.
pub fn load_signatures(dir: &Path) -> Result<Vec<FaultSignature>, StoreError> {
    let mut metas: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("sig_"))
        })
        .collect();
    metas.sort();
    let mut out = Vec::with_capacity(metas.len());
    for path in metas {
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|source| StoreError::Json {
            path: path.clone(),
            source,
        })?;
        let src_path = path.with_extension("ml-src");
        let src = fs::read_to_string(&src_path).map_err(io(&src_path))?;
        let program = parse_executable(&src).map_err(|source| StoreError::Parse {
            path: src_path.clone(),
            source,
        })?;
        let origin_input =
            hex::decode(&meta.origin_input).map_err(|_| StoreError::Hex { path: path.clone() })?;
        out.push(FaultSignature {
            id: meta.id,
            program,
            origin_crash: meta.origin_crash,
            origin_input,
            reference_fingerprint: meta.reference_fingerprint,
            members: meta.members,
            minimal: meta.minimal,
            oracle_runs: meta.oracle_runs,
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
