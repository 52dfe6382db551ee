//! Windows, level calibration and long-term power spectra.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level reported for bands or filters that received no power at all.
pub const SILENCE_FLOOR_DB: f64 = -200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Periodic raised cosine; weight 1 at the frame centre.
    #[default]
    Hann,
    Rect,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rect => vec![1.0; n],
        }
    }

    /// Sum of squared coefficients over a frame of length `n`.
    pub fn power_sum(self, n: usize) -> f64 {
        match self {
            Window::Hann => 3.0 * n as f64 / 8.0,
            Window::Rect => n as f64,
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "rect" => Ok(Window::Rect),
            other => Err(Error::validation(
                "window",
                format!("unknown window '{other}' (hann|rect)"),
            )),
        }
    }
}

/// Mapping between digital full scale and sound pressure level.
///
/// A full-scale sine (mean square 1/2) reads `full_scale_spl` dB SPL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub full_scale_spl: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            full_scale_spl: 100.0,
        }
    }
}

impl Calibration {
    pub fn new(full_scale_spl: f64) -> Self {
        Calibration { full_scale_spl }
    }

    /// dB SPL of a mean-square value; floors at [`SILENCE_FLOOR_DB`].
    pub fn db(&self, mean_square: f64) -> f64 {
        if mean_square > 0.0 {
            (10.0 * mean_square.log10() + self.mean_square_offset()).max(SILENCE_FLOOR_DB)
        } else {
            SILENCE_FLOOR_DB
        }
    }

    pub fn mean_square(&self, db: f64) -> f64 {
        10f64.powf((db - self.mean_square_offset()) / 10.0)
    }

    /// Offset added to 10·log10(mean square).
    pub fn mean_square_offset(&self) -> f64 {
        self.full_scale_spl + 10.0 * 2f64.log10()
    }

    /// Overall level of a waveform in dB SPL.
    pub fn signal_db(&self, signal: &[f64]) -> f64 {
        if signal.is_empty() {
            return SILENCE_FLOOR_DB;
        }
        let ms = signal.iter().map(|x| x * x).sum::<f64>() / signal.len() as f64;
        self.db(ms)
    }
}

/// Welch-averaged one-sided power spectrum.
///
/// `power[k]` is normalised so that the sum over all bins equals the
/// mean square of the signal.
#[derive(Debug, Clone)]
pub struct LongTermSpectrum {
    pub power: Vec<f64>,
    pub fft_size: usize,
    pub sample_rate: f64,
}

impl LongTermSpectrum {
    /// Hann-windowed frames of `fft_size` at 50 % overlap; only whole frames.
    pub fn compute(signal: &[f64], sample_rate: f64, fft_size: usize) -> Result<Self> {
        if signal.len() < fft_size {
            return Err(Error::TooShort {
                len: signal.len(),
                min: fft_size,
            });
        }
        let window = Window::Hann.coefficients(fft_size);
        let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
        let half = fft_size / 2;
        let hop = half;
        let mut acc = vec![0.0; half + 1];
        let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
        let mut frames = 0usize;
        let mut start = 0;
        while start + fft_size <= signal.len() {
            for (b, (&x, &w)) in buf.iter_mut().zip(signal[start..].iter().zip(&window)) {
                *b = Complex64::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
            frames += 1;
            start += hop;
        }
        let norm = frames as f64 * fft_size as f64 * Window::Hann.power_sum(fft_size);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            *a *= one_sided / norm;
        }
        Ok(LongTermSpectrum {
            power: acc,
            fft_size,
            sample_rate,
        })
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}
