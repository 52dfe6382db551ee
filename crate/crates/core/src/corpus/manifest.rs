use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::Direction;
use crate::spectrum::Window;
use crate::wav::WritePolicy;

/// File name of the manifest inside the output directory.
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Ok,
    /// Output from an earlier run was found intact and kept.
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub input: String,
    pub output: String,
    pub status: EntryStatus,
    pub input_sha256: Option<String>,
    pub output_sha256: Option<String>,
    pub duration_s: f64,
    pub clip_count: usize,
    pub stoi: Option<f64>,
    pub error: Option<String>,
    /// Wall-clock processing time; the only field that varies between
    /// otherwise identical runs.
    pub elapsed_s: f64,
}

impl ManifestEntry {
    pub(crate) fn failed(id: &str, input: &Path, output: &Path, err: &Error) -> Self {
        ManifestEntry {
            id: id.to_owned(),
            input: input.display().to_string(),
            output: output.display().to_string(),
            status: EntryStatus::Failed,
            input_sha256: None,
            output_sha256: None,
            duration_s: 0.0,
            clip_count: 0,
            stoi: None,
            error: Some(err.to_string()),
            elapsed_s: 0.0,
        }
    }

    /// Copy with timing zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        ManifestEntry {
            elapsed_s: 0.0,
            ..self.clone()
        }
    }
}

/// Settings that determine output bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub direction: Direction,
    pub sample_rate: u32,
    pub window: Window,
    pub window_length: usize,
    pub full_scale_spl: f64,
    pub resync_interval: usize,
    pub write_policy: WritePolicy,
    pub stoi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tool_version: String,
    pub audiogram_sha256: String,
    pub table_sha256: String,
    pub config: RunConfig,
    /// Sorted by id.
    pub entries: Vec<ManifestEntry>,
    pub processed: usize,
    pub skipped: usize,
    pub failed: usize,
}

impl CorpusManifest {
    pub fn new(
        audiogram_sha256: String,
        table_sha256: String,
        config: RunConfig,
        mut entries: Vec<ManifestEntry>,
    ) -> Self {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let count = |s| entries.iter().filter(|e| e.status == s).count();
        CorpusManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            audiogram_sha256,
            table_sha256,
            config,
            processed: count(EntryStatus::Ok),
            skipped: count(EntryStatus::Skipped),
            failed: count(EntryStatus::Failed),
            entries,
        }
    }

    /// True when outputs of `other` were produced under the same settings.
    pub fn same_run_settings(&self, other: &CorpusManifest) -> bool {
        self.tool_version == other.tool_version
            && self.audiogram_sha256 == other.audiogram_sha256
            && self.table_sha256 == other.table_sha256
            && self.config == other.config
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::cache::write_atomic(path, self.to_json().as_bytes())
    }
}
