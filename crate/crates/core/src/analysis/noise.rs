use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::third_octave::{band_edges, exact_centre, third_octave_spectrum, ThirdOctaveSpectrum};
use crate::error::{Error, Result};
use crate::spectrum::{Calibration, SILENCE_FLOOR_DB};
use crate::waveform::Waveform;

/// Shaping passes after the initial one; each corrects the measured band
/// error of the previous result.
pub const CORRECTION_PASSES: usize = 3;

/// Per-bin amplitude from per-band power densities (dB), interpolated
/// linearly in dB against log frequency between band centres and held flat
/// beyond the outermost centres.
fn shaping_curve(density_db: &[f64], n_bins: usize, bin_hz: f64) -> Vec<f64> {
    let logc: Vec<f64> = (0..density_db.len())
        .map(|i| exact_centre(i).ln())
        .collect();
    let last = density_db.len() - 1;
    (0..n_bins)
        .map(|k| {
            let f = (k as f64 * bin_hz).max(1e-9).ln();
            let db = if f <= logc[0] {
                density_db[0]
            } else if f >= logc[last] {
                density_db[last]
            } else {
                let i = logc.partition_point(|&c| c <= f) - 1;
                let w = (f - logc[i]) / (logc[i + 1] - logc[i]);
                density_db[i] + w * (density_db[i + 1] - density_db[i])
            };
            10f64.powf(db / 20.0)
        })
        .collect()
}

/// Stationary Gaussian noise whose third-octave spectrum matches `template`.
pub fn speech_shaped_noise(
    template: &ThirdOctaveSpectrum,
    seconds: f64,
    sample_rate: u32,
    seed: u64,
    cal: Calibration,
) -> Result<Waveform> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::validation(
            "duration",
            format!("must be > 0, got {seconds}"),
        ));
    }
    if sample_rate == 0 {
        return Err(Error::validation("sample_rate", "must be > 0"));
    }
    if template.is_empty() || template.powers.iter().all(|&p| p <= 0.0) {
        return Err(Error::validation(
            "template",
            "needs at least one band above the floor",
        ));
    }
    let n = (seconds * sample_rate as f64).round() as usize;
    if n < super::third_octave::MIN_SAMPLES {
        return Err(Error::TooShort {
            len: n,
            min: super::third_octave::MIN_SAMPLES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut white: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut white);
    let inverse = planner.plan_fft_inverse(n);
    let bin_hz = sample_rate as f64 / n as f64;
    let half = n / 2;

    let floor = SILENCE_FLOOR_DB;
    let mut density: Vec<f64> = template
        .powers
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (lo, hi) = band_edges(i);
            if p > 0.0 {
                10.0 * (p / (hi - lo)).log10()
            } else {
                floor
            }
        })
        .collect();

    let synthesize = |density: &[f64]| -> Vec<f64> {
        let amp = shaping_curve(density, half + 1, bin_hz);
        let mut buf = white.clone();
        for (k, b) in buf.iter_mut().enumerate() {
            *b *= amp[k.min(n - k)];
        }
        inverse.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    };

    let mut out = synthesize(&density);
    for _ in 0..CORRECTION_PASSES {
        let got = third_octave_spectrum(&Waveform::new(out.clone(), sample_rate), cal)?;
        for (i, d) in density.iter_mut().enumerate() {
            let (want, have) = (template.powers[i], got.powers[i]);
            if want > 0.0 && have > 0.0 {
                *d += 10.0 * (want / have).log10();
            }
        }
        out = synthesize(&density);
    }
    Ok(Waveform::new(out, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::third_octave::average_spectra;
    use crate::synth::speech_like;

    fn speech_template() -> ThirdOctaveSpectrum {
        let cal = Calibration::default();
        let spectra: Vec<_> = (0..4)
            .map(|s| third_octave_spectrum(&speech_like(3.0, 22050, s), cal).unwrap())
            .collect();
        average_spectra(&spectra, cal).unwrap()
    }

    fn max_band_error(a: &ThirdOctaveSpectrum, b: &ThirdOctaveSpectrum) -> f64 {
        a.levels
            .iter()
            .zip(&b.levels)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn matches_speech_template() {
        let cal = Calibration::default();
        let t = speech_template();
        let x = speech_shaped_noise(&t, 10.0, 22050, 1, cal).unwrap();
        assert_eq!(x.len(), 220500);
        let got = third_octave_spectrum(&x, cal).unwrap();
        let err = max_band_error(&got, &t);
        assert!(err < 1.0, "{err}");
    }

    #[test]
    fn independent_seeds() {
        let cal = Calibration::default();
        let t = speech_template();
        let a = speech_shaped_noise(&t, 10.0, 22050, 1, cal).unwrap();
        let b = speech_shaped_noise(&t, 10.0, 22050, 2, cal).unwrap();
        assert_ne!(a.samples, b.samples);
        let sa = third_octave_spectrum(&a, cal).unwrap();
        let sb = third_octave_spectrum(&b, cal).unwrap();
        assert!(max_band_error(&sa, &sb) < 1.0);
        assert_eq!(a, speech_shaped_noise(&t, 10.0, 22050, 1, cal).unwrap());
    }

    #[test]
    fn white_template_gives_white_noise() {
        // a template with equal density per Hz reproduces the +1 dB/band slope
        let cal = Calibration::default();
        let powers = (0..23)
            .map(|i| {
                let (lo, hi) = band_edges(i);
                1e-6 * (hi - lo)
            })
            .collect();
        let t = ThirdOctaveSpectrum::from_powers(powers, cal);
        let x = speech_shaped_noise(&t, 10.0, 22050, 3, cal).unwrap();
        let s = third_octave_spectrum(&x, cal).unwrap();
        for w in s.levels.windows(2) {
            assert!((w[1] - w[0] - 1.003).abs() < 0.5, "{:?}", w);
        }
    }

    #[test]
    fn invalid_inputs() {
        let cal = Calibration::default();
        let t = speech_template();
        assert!(speech_shaped_noise(&t, 0.0, 22050, 1, cal).is_err());
        assert!(speech_shaped_noise(&t, -1.0, 22050, 1, cal).is_err());
        assert!(speech_shaped_noise(&t, f64::NAN, 22050, 1, cal).is_err());
        let silent = ThirdOctaveSpectrum::from_powers(vec![0.0; 23], cal);
        assert!(speech_shaped_noise(&silent, 1.0, 22050, 1, cal).is_err());
    }
}
