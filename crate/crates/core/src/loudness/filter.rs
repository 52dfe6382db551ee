//! Rectangular auditory-filter integration over a one-sided power spectrum.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::erb;
use crate::error::{Error, Result};
use crate::spectrum::{Window, SILENCE_FLOOR_DB};

/// Sums one-sided bin powers within ±ERB/2 of each channel centre.
#[derive(Debug, Clone)]
pub struct ErbIntegrator {
    ranges: Vec<(usize, usize)>,
    centres: Vec<f64>,
    prefix: Vec<f64>,
}

impl ErbIntegrator {
    /// One channel per bin `0..n_bins` of a spectrum with spacing `bin_hz`.
    pub fn per_bin(n_bins: usize, bin_hz: f64) -> Self {
        let centres: Vec<f64> = (0..n_bins).map(|k| k as f64 * bin_hz).collect();
        Self::with_centres(centres, n_bins, bin_hz)
    }

    /// Channels at arbitrary centre frequencies.
    pub fn with_centres(centres: Vec<f64>, n_bins: usize, bin_hz: f64) -> Self {
        let last = n_bins - 1;
        let ranges = centres
            .iter()
            .map(|&fc| {
                let half = erb::bandwidth(fc) / 2.0;
                let lo = ((fc - half) / bin_hz).ceil().max(0.0) as usize;
                let hi = (((fc + half) / bin_hz).floor() as usize).min(last);
                if lo > hi {
                    let nearest = ((fc / bin_hz).round() as usize).min(last);
                    (nearest, nearest)
                } else {
                    (lo, hi)
                }
            })
            .collect();
        ErbIntegrator {
            ranges,
            centres,
            prefix: vec![0.0; n_bins + 1],
        }
    }

    /// Uniform 0.25-Cam channel grid from `lo_hz` up to `hi_hz`.
    pub fn cam_grid(lo_hz: f64, hi_hz: f64, step_cam: f64, n_bins: usize, bin_hz: f64) -> Self {
        let start = erb::cam(lo_hz);
        let stop = erb::cam(hi_hz);
        let count = ((stop - start) / step_cam).floor() as usize + 1;
        let centres = (0..count)
            .map(|i| erb::cam_to_hz(start + i as f64 * step_cam))
            .collect();
        Self::with_centres(centres, n_bins, bin_hz)
    }

    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn range(&self, channel: usize) -> (usize, usize) {
        self.ranges[channel]
    }

    /// Channel levels `10·log10(Σ power) + offset`, floored at −200 dB.
    pub fn levels(&mut self, power: &[f64], offset: f64, out: &mut [f64]) {
        debug_assert_eq!(power.len() + 1, self.prefix.len());
        let mut acc = 0.0;
        self.prefix[0] = 0.0;
        for (p, &x) in self.prefix[1..].iter_mut().zip(power) {
            acc += x;
            *p = acc;
        }
        for (o, &(lo, hi)) in out.iter_mut().zip(&self.ranges) {
            let sum = self.prefix[hi + 1] - self.prefix[lo];
            *o = power_to_db(sum, offset);
        }
    }
}

#[inline]
pub(crate) fn power_to_db(sum: f64, offset: f64) -> f64 {
    // prefix differences can go slightly negative through cancellation
    if sum > 0.0 {
        (10.0 * sum.log10() + offset).max(SILENCE_FLOOR_DB)
    } else {
        SILENCE_FLOOR_DB
    }
}

/// Complex spectrum of one analysis window.
#[derive(Debug, Clone)]
pub struct FrameSpectrum {
    pub bins: Vec<Complex64>,
    pub sample_rate: f64,
    /// dB added to 10·log10 of the one-sided raw bin power.
    pub calibration_offset: f64,
}

impl FrameSpectrum {
    /// Window and transform a real frame.
    pub fn from_frame(
        frame: &[f64],
        window: Window,
        sample_rate: f64,
        calibration_offset: f64,
    ) -> Self {
        let n = frame.len();
        let w = window.coefficients(n);
        let mut bins: Vec<Complex64> = frame
            .iter()
            .zip(&w)
            .map(|(&x, &w)| Complex64::new(x * w, 0.0))
            .collect();
        FftPlanner::<f64>::new()
            .plan_fft_forward(n)
            .process(&mut bins);
        FrameSpectrum {
            bins,
            sample_rate,
            calibration_offset,
        }
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate / self.bins.len() as f64
    }
}

/// One-sided power `c_k·|X_k|²` with `c_k = 2` except at DC and Nyquist.
pub(crate) fn one_sided_power(bins: &[Complex64], out: &mut [f64]) {
    let half = bins.len() / 2;
    for (k, o) in out.iter_mut().enumerate().take(half + 1) {
        let c = if k == 0 || k == half { 1.0 } else { 2.0 };
        *o = c * bins[k].norm_sqr();
    }
}

/// Auditory-filter level in dB SPL for each non-negative bin `0..=N/2`.
pub fn auditory_filter_levels(s: &FrameSpectrum) -> Result<Vec<f64>> {
    let n = s.bins.len();
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::validation(
            "spectrum",
            format!("length {n} is not a power of two >= 4"),
        ));
    }
    let half = n / 2;
    let mut power = vec![0.0; half + 1];
    one_sided_power(&s.bins, &mut power);
    let mut integrator = ErbIntegrator::per_bin(half + 1, s.sample_rate / n as f64);
    let mut out = vec![0.0; half + 1];
    integrator.levels(&power, s.calibration_offset, &mut out);
    Ok(out)
}
