use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::minilang::FailureFingerprint;
use crate::triage::CrashRecord;

use super::GroundTruthLabel;

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    file: String,
    original_fingerprint: FailureFingerprint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

fn invalid(e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

/// Write `inputs/<id>.bin` for every crash and a `manifest.json` in corpus
/// order.
pub fn save_corpus(dir: &Path, corpus: &[CrashRecord]) -> io::Result<()> {
    let inputs = dir.join("inputs");
    fs::create_dir_all(&inputs)?;
    let mut manifest = Vec::with_capacity(corpus.len());
    for c in corpus {
        let file = format!("inputs/{}.bin", c.id);
        fs::write(dir.join(&file), &c.input)?;
        manifest.push(ManifestEntry {
            id: c.id.clone(),
            file,
            original_fingerprint: c.original_fingerprint.clone(),
            label: c.label.clone(),
        });
    }
    let text = serde_json::to_string_pretty(&manifest).map_err(invalid)?;
    fs::write(dir.join("manifest.json"), text + "\n")
}

pub fn load_corpus(dir: &Path) -> io::Result<Vec<CrashRecord>> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(invalid)?;
    manifest
        .into_iter()
        .map(|e| {
            Ok(CrashRecord {
                input: fs::read(dir.join(&e.file))?,
                id: e.id,
                original_fingerprint: e.original_fingerprint,
                label: e.label,
            })
        })
        .collect()
}

pub fn save_labels(path: &Path, labels: &[GroundTruthLabel]) -> io::Result<()> {
    let text = serde_json::to_string_pretty(labels).map_err(invalid)?;
    fs::write(path, text + "\n")
}

/// Labels keyed by crash id (`None` for unknown).
pub fn load_labels(path: &Path) -> io::Result<BTreeMap<String, Option<String>>> {
    let text = fs::read_to_string(path)?;
    let v: Vec<GroundTruthLabel> = serde_json::from_str(&text).map_err(invalid)?;
    Ok(v.into_iter().map(|l| (l.crash_id, l.bug)).collect())
}
