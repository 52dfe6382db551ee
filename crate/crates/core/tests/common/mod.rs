#![allow(dead_code)]

use std::path::{Path, PathBuf};

use loudcomp::analysis::{average_spectra, speech_shaped_noise, third_octave_spectrum};
use loudcomp::spectrum::Calibration;
use loudcomp::synth::speech_like;
use loudcomp::wav::{write_wav, WritePolicy};
use loudcomp::{Audiogram, Waveform};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn audiogram(name: &str) -> Audiogram {
    Audiogram::from_json(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Write `count` speech-like files and LJSpeech-style metadata; returns ids.
pub fn write_speech_corpus(dir: &Path, count: usize, seconds: f64, seed: u64) -> Vec<String> {
    std::fs::create_dir_all(dir).unwrap();
    let mut meta = String::new();
    let ids: Vec<String> = (0..count).map(|i| format!("utt{i:03}")).collect();
    for (i, id) in ids.iter().enumerate() {
        let x = speech_like(seconds, 22050, seed + i as u64);
        write_wav(&dir.join(format!("{id}.wav")), &x, WritePolicy::Float).unwrap();
        meta.push_str(&format!("{id}|text {i}|text {i}\n"));
    }
    std::fs::write(dir.join("metadata.csv"), meta).unwrap();
    ids
}

/// Stationary noise with the average spectrum of a few speech-like clips,
/// scaled to `level_db` SPL.
pub fn speech_noise(seconds: f64, level_db: f64, seed: u64) -> Waveform {
    let cal = Calibration::default();
    let spectra: Vec<_> = (0..4)
        .map(|s| third_octave_spectrum(&speech_like(3.0, 22050, 100 + s), cal).unwrap())
        .collect();
    let template = average_spectra(&spectra, cal).unwrap();
    let n = speech_shaped_noise(&template, seconds, 22050, seed, cal).unwrap();
    let now = cal.signal_db(&n.samples);
    n.scaled(level_db - now)
}
