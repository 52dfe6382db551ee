//! Short-time objective intelligibility (classic, non-extended form).
//!
//! Both signals are resampled to 10 kHz, frames more than 40 dB below the
//! loudest clean frame are dropped from both, and 256-sample Hann frames at
//! 50% overlap are zero-padded to 512-point spectra. Power is grouped into 15
//! one-third-octave bands from 150 Hz. For every 30-frame segment the
//! degraded band envelope is scaled to the clean envelope's energy, clipped
//! at 15 dB above it, and correlated with the clean envelope. The score is
//! the mean correlation over bands and segments.

mod resample;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::waveform::Waveform;

pub use resample::resample;

pub const SAMPLE_RATE: u32 = 10_000;
pub const FRAME_LEN: usize = 256;
pub const FFT_LEN: usize = 512;
pub const HOP: usize = FRAME_LEN / 2;
pub const BANDS: usize = 15;
pub const LOWEST_CENTRE_HZ: f64 = 150.0;
pub const SEGMENT_FRAMES: usize = 30;
pub const CLIP_DB: f64 = -15.0;
pub const DYNAMIC_RANGE_DB: f64 = 40.0;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct StoiScore {
    /// Mean correlation, clamped to [0, 1].
    pub value: f64,
    /// `[band][segment]` correlations before averaging.
    pub band_segment_correlations: Vec<Vec<f64>>,
}

impl StoiScore {
    pub fn segments(&self) -> usize {
        self.band_segment_correlations.first().map_or(0, Vec::len)
    }
}

/// Hann window of `n + 2` points with both zero end points removed.
fn analysis_window() -> Vec<f64> {
    let m = (FRAME_LEN + 2) as f64;
    (1..=FRAME_LEN)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (m - 1.0)).cos())
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME_LEN)).step_by(HOP)
}

/// Band membership as half-open bin ranges, edges snapped to the nearest bin.
fn band_bins() -> Vec<(usize, usize)> {
    let bin_hz = SAMPLE_RATE as f64 / FFT_LEN as f64;
    let nearest = |f: f64| -> usize {
        // ties resolve to the lower bin
        let k = (f / bin_hz).round() as usize;
        let k = k.min(FFT_LEN / 2);
        if k > 0 && ((k - 1) as f64 * bin_hz - f).abs() <= (k as f64 * bin_hz - f).abs() {
            k - 1
        } else {
            k
        }
    };
    (0..BANDS)
        .map(|i| {
            let i = i as f64;
            let lo = LOWEST_CENTRE_HZ * 2f64.powf((2.0 * i - 1.0) / 6.0);
            let hi = LOWEST_CENTRE_HZ * 2f64.powf((2.0 * i + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Drop frames of `clean` more than the dynamic range below its loudest
/// frame, together with the same frames of `degraded`, and overlap-add the
/// remaining windowed frames.
fn remove_silent_frames(clean: &[f64], degraded: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = analysis_window();
    let starts: Vec<usize> = frame_starts(clean.len()).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = clean[s..s + FRAME_LEN]
                .iter()
                .zip(&w)
                .map(|(x, w)| (x * w) * (x * w))
                .sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| max - DYNAMIC_RANGE_DB - e < 0.0)
        .map(|(&s, _)| s)
        .collect();
    let out_len = if kept.is_empty() {
        0
    } else {
        (kept.len() - 1) * HOP + FRAME_LEN
    };
    let mut xo = vec![0.0; out_len];
    let mut yo = vec![0.0; out_len];
    for (i, &s) in kept.iter().enumerate() {
        let o = i * HOP;
        for j in 0..FRAME_LEN {
            xo[o + j] += w[j] * clean[s + j];
            yo[o + j] += w[j] * degraded[s + j];
        }
    }
    (xo, yo)
}

/// Band envelopes `[band][frame]`: root of summed bin power per band.
fn band_envelopes(x: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let w = analysis_window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FFT_LEN);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let mut env = vec![Vec::with_capacity(starts.len()); bands.len()];
    for s in starts {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(if j < FRAME_LEN { w[j] * x[s + j] } else { 0.0 }, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (e, &(lo, hi)) in env.iter_mut().zip(bands) {
            let p: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            e.push(p.sqrt());
        }
    }
    env
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    let (nx, ny) = (norm(&xc) + EPS, norm(&yc) + EPS);
    xc.iter().zip(&yc).map(|(a, b)| (a / nx) * (b / ny)).sum()
}

/// Intelligibility of `degraded` relative to `clean`.
pub fn stoi(clean: &Waveform, degraded: &Waveform) -> Result<StoiScore> {
    if clean.len() != degraded.len() {
        return Err(Error::LengthMismatch(clean.len(), degraded.len()));
    }
    if clean.sample_rate != degraded.sample_rate {
        return Err(Error::validation(
            "sample_rate",
            format!(
                "clean is {} Hz, degraded is {} Hz",
                clean.sample_rate, degraded.sample_rate
            ),
        ));
    }
    if clean.sample_rate < SAMPLE_RATE {
        return Err(Error::validation(
            "sample_rate",
            format!("must be >= {SAMPLE_RATE} Hz, got {}", clean.sample_rate),
        ));
    }
    let x = resample(clean, SAMPLE_RATE)?;
    let y = resample(degraded, SAMPLE_RATE)?;
    let (x, y) = remove_silent_frames(&x.samples, &y.samples);

    let bands = band_bins();
    let xe = band_envelopes(&x, &bands);
    let ye = band_envelopes(&y, &bands);
    let frames = xe[0].len();
    if frames < SEGMENT_FRAMES {
        return Err(Error::TooShort {
            len: frames,
            min: SEGMENT_FRAMES,
        });
    }
    let clip = 10f64.powf(-CLIP_DB / 20.0);
    let segments = frames - SEGMENT_FRAMES + 1;
    let mut corr: Vec<Vec<f64>> = (0..BANDS).map(|_| Vec::with_capacity(segments)).collect();
    let mut total = 0.0;
    for m in SEGMENT_FRAMES..=frames {
        for (b, row) in corr.iter_mut().enumerate() {
            let xs = &xe[b][m - SEGMENT_FRAMES..m];
            let ys = &ye[b][m - SEGMENT_FRAMES..m];
            let alpha = norm(xs) / (norm(ys) + EPS);
            let yp: Vec<f64> = ys
                .iter()
                .zip(xs)
                .map(|(y, x)| (y * alpha).min(x * (1.0 + clip)))
                .collect();
            let r = correlation(xs, &yp);
            total += r;
            row.push(r);
        }
    }
    let value = (total / (segments * BANDS) as f64).clamp(0.0, 1.0);
    Ok(StoiScore {
        value,
        band_segment_correlations: corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::speech_like;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, rms: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                rms * v
            })
            .collect()
    }

    fn add_noise(x: &Waveform, snr_db: f64, seed: u64) -> Waveform {
        let n = noise(x.len(), x.rms() * 10f64.powf(-snr_db / 20.0), seed);
        Waveform::new(
            x.samples.iter().zip(&n).map(|(a, b)| a + b).collect(),
            x.sample_rate,
        )
    }

    #[test]
    fn band_layout() {
        // oracle: edge = first bin minimising squared distance to the edge
        let f: Vec<f64> = (0..=256).map(|k| k as f64 * 10000.0 / 512.0).collect();
        let argmin = |t: f64| {
            let mut best = 0;
            for k in 1..f.len() {
                if (f[k] - t).powi(2) < (f[best] - t).powi(2) {
                    best = k;
                }
            }
            best
        };
        let b = band_bins();
        assert_eq!(b.len(), 15);
        for (i, &(lo, hi)) in b.iter().enumerate() {
            let i = i as f64;
            assert_eq!(lo, argmin(150.0 * 2f64.powf((2.0 * i - 1.0) / 6.0)));
            assert_eq!(hi, argmin(150.0 * 2f64.powf((2.0 * i + 1.0) / 6.0)));
        }
        assert_eq!(b[0], (7, 9));
        assert_eq!(b[14], (174, 219));
    }

    #[test]
    fn window_shape() {
        let w = analysis_window();
        assert_eq!(w.len(), 256);
        assert!(w[0] > 0.0 && w[255] > 0.0);
        assert!((w[0] - w[255]).abs() < 1e-15);
    }

    #[test]
    fn self_comparison_is_one() {
        let x = speech_like(3.0, 22050, 1);
        let s = stoi(&x, &x).unwrap();
        assert!((s.value - 1.0).abs() < 1e-3, "{}", s.value);
        assert_eq!(s.band_segment_correlations.len(), 15);
    }

    #[test]
    fn frozen_reference_value() {
        // computed independently with a reference implementation on the
        // same samples
        let x = speech_like(3.0, 10000, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = x
            .samples
            .iter()
            .map(|v| {
                let n: f64 = StandardNormal.sample(&mut rng);
                v + 0.03 * n
            })
            .collect();
        let s = stoi(&x, &Waveform::new(y, 10000)).unwrap().value;
        assert!((s - 0.607120603147).abs() < 1e-9, "{s}");
    }

    #[test]
    fn decreases_with_snr() {
        let x = speech_like(4.0, 22050, 2);
        let scores: Vec<f64> = [10.0, 0.0, -10.0]
            .iter()
            .map(|&snr| stoi(&x, &add_noise(&x, snr, 5)).unwrap().value)
            .collect();
        assert!(scores[0] > scores[1] && scores[1] > scores[2], "{scores:?}");
    }

    #[test]
    fn unrelated_noise_scores_low() {
        let x = speech_like(4.0, 22050, 3);
        let n = Waveform::new(noise(x.len(), 0.03, 9), 22050);
        let s = stoi(&x, &n).unwrap().value;
        assert!(s < 0.3, "{s}");
    }

    #[test]
    fn scale_invariant() {
        let x = speech_like(3.0, 16000, 4);
        let y = add_noise(&x, 0.0, 6);
        let a = stoi(&x, &y).unwrap().value;
        let b = stoi(&x.scaled(7.0), &y.scaled(-13.0)).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn asymmetric() {
        let x = speech_like(3.0, 16000, 5);
        let y = add_noise(&x, -5.0, 7);
        let a = stoi(&x, &y).unwrap().value;
        let b = stoi(&y, &x).unwrap().value;
        assert!((a - b).abs() > 1e-3, "{a} {b}");
    }

    #[test]
    fn appended_silence_ignored() {
        let x = speech_like(3.0, 10000, 6);
        let y = add_noise(&x, 0.0, 8);
        let a = stoi(&x, &y).unwrap().value;
        let pad = |w: &Waveform| {
            let mut s = w.samples.clone();
            s.extend(std::iter::repeat_n(0.0, 10000));
            Waveform::new(s, w.sample_rate)
        };
        let b = stoi(&pad(&x), &pad(&y)).unwrap().value;
        assert!((a - b).abs() < 1e-3, "{a} {b}");
    }

    #[test]
    fn errors() {
        let x = speech_like(1.0, 22050, 1);
        let short = Waveform::new(x.samples[..3000].to_vec(), 22050);
        assert!(matches!(stoi(&short, &short), Err(Error::TooShort { .. })));
        let y = Waveform::new(x.samples[..1000].to_vec(), 22050);
        assert!(matches!(stoi(&x, &y), Err(Error::LengthMismatch(..))));
        let low = Waveform::new(vec![0.1; 9000], 8000);
        assert!(stoi(&low, &low).is_err());
    }
}
