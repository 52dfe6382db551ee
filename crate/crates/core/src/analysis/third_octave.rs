use std::io::Write;

use crate::error::{Error, Result};
use crate::spectrum::{Calibration, LongTermSpectrum, SILENCE_FLOOR_DB};
use crate::waveform::Waveform;

/// Nominal labels of the 23 bands from 50 Hz to 8 kHz.
pub const NOMINAL_CENTRES_HZ: [f64; 23] = [
    50.0, 63.0, 80.0, 100.0, 125.0, 160.0, 200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0,
    1250.0, 1600.0, 2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0,
];
const FIRST_BAND_INDEX: i32 = -13;
/// Longest analysis transform; shorter signals use the largest power of two
/// that fits.
pub const MAX_FFT_SIZE: usize = 8192;
pub const MIN_SAMPLES: usize = 1024;

/// Exact centre of band `i`: 1000·2^(n/3).
pub fn exact_centre(i: usize) -> f64 {
    1000.0 * 2f64.powf((FIRST_BAND_INDEX + i as i32) as f64 / 3.0)
}

/// Band edges `[centre / 2^(1/6), centre · 2^(1/6)]`.
pub fn band_edges(i: usize) -> (f64, f64) {
    let c = exact_centre(i);
    let k = 2f64.powf(1.0 / 6.0);
    (c / k, c * k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOctaveSpectrum {
    /// Nominal band centres in Hz.
    pub centres: Vec<f64>,
    /// Band levels in dB SPL, floored at the silence floor.
    pub levels: Vec<f64>,
    /// Mean-square signal power in each band.
    pub powers: Vec<f64>,
}

impl ThirdOctaveSpectrum {
    pub fn from_powers(powers: Vec<f64>, cal: Calibration) -> Self {
        ThirdOctaveSpectrum {
            centres: NOMINAL_CENTRES_HZ.to_vec(),
            levels: powers.iter().map(|&p| cal.db(p)).collect(),
            powers,
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "band_hz,level_db")?;
        for (c, l) in self.centres.iter().zip(&self.levels) {
            writeln!(out, "{c},{l}")?;
        }
        out.flush()
    }
}

/// Fraction of bin `k`'s span `[(k − ½)Δ, (k + ½)Δ]` inside `[lo, hi]`.
fn overlap(k: usize, bin_hz: f64, lo: f64, hi: f64) -> f64 {
    let a = (k as f64 - 0.5) * bin_hz;
    let b = (k as f64 + 0.5) * bin_hz;
    ((b.min(hi) - a.max(lo)) / bin_hz).max(0.0)
}

/// Band powers of a long-term spectrum, splitting bins at band edges.
pub fn band_powers(lts: &LongTermSpectrum) -> Vec<f64> {
    let bin_hz = lts.bin_hz();
    (0..NOMINAL_CENTRES_HZ.len())
        .map(|i| {
            let (lo, hi) = band_edges(i);
            let k0 = ((lo / bin_hz - 0.5).floor().max(0.0)) as usize;
            let k1 = ((hi / bin_hz + 0.5).ceil() as usize).min(lts.power.len() - 1);
            (k0..=k1)
                .map(|k| lts.power[k] * overlap(k, bin_hz, lo, hi))
                .sum()
        })
        .collect()
}

pub fn third_octave_spectrum(signal: &Waveform, cal: Calibration) -> Result<ThirdOctaveSpectrum> {
    if signal.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            len: signal.len(),
            min: MIN_SAMPLES,
        });
    }
    let fft = MAX_FFT_SIZE.min(1 << signal.len().ilog2());
    let lts = LongTermSpectrum::compute(&signal.samples, signal.sample_rate as f64, fft)?;
    Ok(ThirdOctaveSpectrum::from_powers(band_powers(&lts), cal))
}

/// Per-band power mean across spectra. Each band sums its values in sorted
/// order, so the result does not depend on input order.
pub fn average_spectra(
    spectra: &[ThirdOctaveSpectrum],
    cal: Calibration,
) -> Result<ThirdOctaveSpectrum> {
    let first = spectra.first().ok_or(Error::Empty)?;
    if spectra.iter().any(|s| s.centres != first.centres) {
        return Err(Error::validation("spectra", "band layouts differ"));
    }
    let n = spectra.len() as f64;
    let powers = (0..first.len())
        .map(|b| {
            let mut v: Vec<f64> = spectra.iter().map(|s| s.powers[b]).collect();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>() / n
        })
        .collect();
    Ok(ThirdOctaveSpectrum::from_powers(powers, cal))
}

/// True for levels at or below the silence floor.
pub fn is_floor(level: f64) -> bool {
    level <= SILENCE_FLOOR_DB
}
