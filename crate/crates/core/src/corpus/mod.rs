//! Batch compensation of speech corpora.
//!
//! Files are processed independently on a worker pool sharing one gain
//! table. Output bytes depend only on the input, the table and the
//! [`CompensateOptions`], never on scheduling. A manifest with digests of
//! every input and output is written to the output directory; rerunning with
//! the same settings keeps outputs whose digests still match.

mod cache;
mod manifest;

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gain::GainTable;
use crate::stoi::stoi;
use crate::stream::{process_sliding, ProcessorConfig};
use crate::wav::{read_wav, write_wav, WritePolicy};

pub use cache::{TableCache, CACHE_ENV};
pub use manifest::{CorpusManifest, EntryStatus, ManifestEntry, RunConfig, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompensateOptions {
    pub processor: ProcessorConfig,
    pub policy: WritePolicy,
    /// Score each output against its input with STOI.
    pub compute_stoi: bool,
}

/// One corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    pub id: String,
    pub input: PathBuf,
}

fn validate_id(id: &str, line: usize) -> Result<()> {
    if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
        return Err(Error::validation(
            format!("metadata line {line}"),
            format!("invalid id '{id}'"),
        ));
    }
    Ok(())
}

/// Parse corpus metadata. Lines are either pipe-delimited
/// `id|text|normalized_text` records, whose audio is `wav_dir/id.wav`, or
/// plain entries naming a WAV file (relative to `wav_dir`) or a bare id.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_metadata(text: &str, wav_dir: &Path) -> Result<Vec<CorpusItem>> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, input) = if let Some((id, _)) = line.split_once('|') {
            let id = id.trim();
            (id.to_owned(), wav_dir.join(format!("{id}.wav")))
        } else if line.to_ascii_lowercase().ends_with(".wav") {
            let input = wav_dir.join(line);
            let stem = Path::new(line)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (stem, input)
        } else {
            (line.to_owned(), wav_dir.join(format!("{line}.wav")))
        };
        validate_id(&id, n + 1)?;
        if !seen.insert(id.clone()) {
            return Err(Error::validation(
                format!("metadata line {}", n + 1),
                format!("duplicate id '{id}'"),
            ));
        }
        items.push(CorpusItem { id, input });
    }
    if items.is_empty() {
        return Err(Error::validation("metadata", "no entries"));
    }
    Ok(items)
}

pub fn read_metadata(path: &Path, wav_dir: &Path) -> Result<Vec<CorpusItem>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_metadata(&text, wav_dir)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Compensate one file and describe the result.
pub fn compensate_file(
    id: &str,
    input: &Path,
    output: &Path,
    table: &GainTable,
    opts: &CompensateOptions,
) -> Result<ManifestEntry> {
    let start = Instant::now();
    let input_sha256 = file_sha256(input)?;
    let x = read_wav(input)?;
    let y = process_sliding(&x, table, &opts.processor)?;
    let stoi_value = if opts.compute_stoi {
        match stoi(&x, &y) {
            Ok(s) => Some(s.value),
            Err(e) => {
                eprintln!("warning: {id}: no STOI score: {e}");
                None
            }
        }
    } else {
        None
    };
    let report = write_wav(output, &y, opts.policy)?;
    Ok(ManifestEntry {
        id: id.to_owned(),
        input: input.display().to_string(),
        output: output.display().to_string(),
        status: EntryStatus::Ok,
        input_sha256: Some(input_sha256),
        output_sha256: Some(file_sha256(output)?),
        duration_s: x.duration(),
        clip_count: report.clip_count,
        stoi: stoi_value,
        error: None,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Settings recorded in the manifest for a run.
pub fn run_config(table: &GainTable, opts: &CompensateOptions) -> RunConfig {
    RunConfig {
        direction: table.direction(),
        sample_rate: table.sample_rate(),
        window: opts.processor.window,
        window_length: opts.processor.window_length,
        full_scale_spl: opts.processor.full_scale_spl,
        resync_interval: opts.processor.resync_interval,
        write_policy: opts.policy,
        stoi: opts.compute_stoi,
    }
}

/// An earlier result is reusable when both files still hash as recorded.
fn reusable(prev: &ManifestEntry, item: &CorpusItem, output: &Path) -> bool {
    if !matches!(prev.status, EntryStatus::Ok | EntryStatus::Skipped)
        || prev.input != item.input.display().to_string()
    {
        return false;
    }
    let same = |path: &Path, want: &Option<String>| match (file_sha256(path), want) {
        (Ok(got), Some(want)) => &got == want,
        _ => false,
    };
    same(output, &prev.output_sha256) && same(&item.input, &prev.input_sha256)
}

/// Process every item into `out_dir`, writing `out_dir/manifest.json`.
///
/// Failures are recorded and do not stop the run; check
/// [`CorpusManifest::failed`].
pub fn run_corpus(
    items: &[CorpusItem],
    out_dir: &Path,
    table: &GainTable,
    audiogram_sha256: &str,
    jobs: usize,
    opts: &CompensateOptions,
) -> Result<CorpusManifest> {
    if jobs == 0 {
        return Err(Error::validation("jobs", "must be >= 1"));
    }
    opts.processor.validate()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let manifest_path = out_dir.join(MANIFEST_NAME);
    let config = run_config(table, opts);
    let table_sha256 = table.digest();

    let probe = CorpusManifest::new(
        audiogram_sha256.to_owned(),
        table_sha256.clone(),
        config.clone(),
        Vec::new(),
    );
    let previous: HashMap<String, ManifestEntry> = match CorpusManifest::load(&manifest_path) {
        Ok(m) if m.same_run_settings(&probe) => {
            m.entries.into_iter().map(|e| (e.id.clone(), e)).collect()
        }
        _ => HashMap::new(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::validation("jobs", e.to_string()))?;
    let entries: Vec<ManifestEntry> = pool.install(|| {
        items
            .par_iter()
            .map(|item| {
                let output = out_dir.join(format!("{}.wav", item.id));
                if let Some(prev) = previous
                    .get(&item.id)
                    .filter(|p| reusable(p, item, &output))
                {
                    return ManifestEntry {
                        status: EntryStatus::Skipped,
                        elapsed_s: 0.0,
                        ..prev.clone()
                    };
                }
                compensate_file(&item.id, &item.input, &output, table, opts)
                    .unwrap_or_else(|e| ManifestEntry::failed(&item.id, &item.input, &output, &e))
            })
            .collect()
    });

    let manifest = CorpusManifest::new(audiogram_sha256.to_owned(), table_sha256, config, entries);
    manifest.save(&manifest_path)?;
    Ok(manifest)
}
