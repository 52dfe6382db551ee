mod common;

use std::path::Path;

use common::{audiogram, speech_noise, write_speech_corpus};
use loudcomp::analysis::loudness_restoration_report;
use loudcomp::corpus::{
    read_metadata, run_corpus, CompensateOptions, CorpusManifest, EntryStatus, ManifestEntry,
};
use loudcomp::spectrum::Calibration;
use loudcomp::wav::{read_wav, write_wav, WritePolicy};
use loudcomp::{Direction, EarModel, GainTable, TableSpec, Waveform};

fn sloping_table() -> (GainTable, String) {
    let a = audiogram("sloping.json");
    let t = GainTable::for_audiogram(&a, Direction::Compensate, TableSpec::default()).unwrap();
    (t, a.digest())
}

fn untimed(m: &CorpusManifest) -> Vec<ManifestEntry> {
    m.entries
        .iter()
        .map(|e| ManifestEntry {
            output: Path::new(&e.output)
                .file_name()
                .unwrap()
                .to_string_lossy()
                .into(),
            ..e.without_timing()
        })
        .collect()
}

#[test]
fn job_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    let ids = write_speech_corpus(&wavs, 20, 1.0, 40);
    let items = read_metadata(&wavs.join("metadata.csv"), &wavs).unwrap();
    let (table, digest) = sloping_table();
    let opts = CompensateOptions {
        compute_stoi: true,
        ..CompensateOptions::default()
    };
    let one = run_corpus(&items, &dir.path().join("j1"), &table, &digest, 1, &opts).unwrap();
    let eight = run_corpus(&items, &dir.path().join("j8"), &table, &digest, 8, &opts).unwrap();
    assert_eq!(one.processed, 20);
    assert_eq!(untimed(&one), untimed(&eight));
    for id in &ids {
        let a = std::fs::read(dir.path().join("j1").join(format!("{id}.wav"))).unwrap();
        let b = std::fs::read(dir.path().join("j8").join(format!("{id}.wav"))).unwrap();
        assert_eq!(a, b, "{id}");
    }
    assert!(one.entries.iter().all(|e| e.stoi.is_some_and(|s| s > 0.5)));
}

#[test]
fn rerun_skips_and_repairs() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    write_speech_corpus(&wavs, 4, 0.5, 60);
    let items = read_metadata(&wavs.join("metadata.csv"), &wavs).unwrap();
    let out = dir.path().join("out");
    let (table, digest) = sloping_table();
    let opts = CompensateOptions::default();
    let first = run_corpus(&items, &out, &table, &digest, 2, &opts).unwrap();
    assert_eq!(first.processed, 4);

    let again = run_corpus(&items, &out, &table, &digest, 2, &opts).unwrap();
    assert_eq!(again.skipped, 4);
    assert!(again
        .entries
        .iter()
        .all(|e| e.status == EntryStatus::Skipped));
    assert_eq!(
        again
            .entries
            .iter()
            .map(|e| &e.output_sha256)
            .collect::<Vec<_>>(),
        first
            .entries
            .iter()
            .map(|e| &e.output_sha256)
            .collect::<Vec<_>>()
    );

    // a damaged output is recomputed byte for byte
    let damaged = out.join("utt001.wav");
    let good = std::fs::read(&damaged).unwrap();
    std::fs::write(&damaged, b"truncated").unwrap();
    let repaired = run_corpus(&items, &out, &table, &digest, 2, &opts).unwrap();
    assert_eq!((repaired.processed, repaired.skipped), (1, 3));
    assert_eq!(std::fs::read(&damaged).unwrap(), good);

    // different settings invalidate earlier results
    let clip = CompensateOptions {
        policy: WritePolicy::Clip,
        ..opts
    };
    assert_eq!(
        run_corpus(&items, &out, &table, &digest, 2, &clip)
            .unwrap()
            .processed,
        4
    );
}

#[test]
fn clipping_is_counted_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    std::fs::create_dir_all(&wavs).unwrap();
    // a loud high-frequency tone that the sloping-loss gains push past full scale
    let x = Waveform::new(
        (0..22050)
            .map(|n| 0.3 * (2.0 * std::f64::consts::PI * 4000.0 * n as f64 / 22050.0).sin())
            .collect(),
        22050,
    );
    write_wav(&wavs.join("loud.wav"), &x, WritePolicy::Float).unwrap();
    let items = loudcomp::corpus::parse_metadata("loud.wav\n", &wavs).unwrap();
    let (table, digest) = sloping_table();
    let opts = CompensateOptions {
        policy: WritePolicy::Clip,
        ..CompensateOptions::default()
    };
    let m = run_corpus(&items, &dir.path().join("out"), &table, &digest, 1, &opts).unwrap();
    assert!(m.entries[0].clip_count > 0);
    let y = read_wav(&dir.path().join("out/loud.wav")).unwrap();
    assert!(y.peak() <= 1.0);
}

/// Twenty-file desk corpus: seventeen speech-like utterances and three
/// stationary speech-shaped noise clips at 50, 65 and 80 dB SPL. The
/// long-term restoration oracle is gated on the stationary clips and
/// reported for speech.
#[test]
fn desk_corpus_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    let mut ids = write_speech_corpus(&wavs, 17, 2.0, 80);
    let mut meta = std::fs::read_to_string(wavs.join("metadata.csv")).unwrap();
    for (i, level) in [50.0, 65.0, 80.0].into_iter().enumerate() {
        let id = format!("noise{level}");
        write_wav(
            &wavs.join(format!("{id}.wav")),
            &speech_noise(2.0, level, 7 + i as u64),
            WritePolicy::Float,
        )
        .unwrap();
        meta.push_str(&format!("{id}|noise|noise\n"));
        ids.push(id);
    }
    std::fs::write(wavs.join("metadata.csv"), meta).unwrap();
    let items = read_metadata(&wavs.join("metadata.csv"), &wavs).unwrap();
    assert_eq!(items.len(), 20);

    let a = audiogram("sloping.json");
    let table = GainTable::for_audiogram(&a, Direction::Compensate, TableSpec::default()).unwrap();
    let out = dir.path().join("out");
    let m = run_corpus(
        &items,
        &out,
        &table,
        &a.digest(),
        4,
        &CompensateOptions::default(),
    )
    .unwrap();
    assert_eq!((m.processed, m.failed), (20, 0));

    let ear = EarModel::impaired(a);
    for id in &ids {
        let x = read_wav(&wavs.join(format!("{id}.wav"))).unwrap();
        let y = read_wav(&out.join(format!("{id}.wav"))).unwrap();
        let r = loudness_restoration_report(&x, &y, &ear, Calibration::default()).unwrap();
        if id.starts_with("noise") {
            assert!(r.median_abs_error < 0.10, "{id}: {}", r.median_abs_error);
        } else if id == "utt000" {
            eprintln!(
                "speech restoration (not gated) {id}: median {:.3}",
                r.median_abs_error
            );
        }
    }
}
