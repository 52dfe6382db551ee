//! Rational-ratio windowed-sinc resampling.
//!
//! The Kaiser-windowed prototype is cut off at 0.475·min(from, to) with a
//! transition width of 0.05·min(from, to) and 80 dB stopband attenuation, so
//! the passband extends flat to 0.45·min(from, to). Each polyphase branch is
//! normalised to unit DC gain. Samples outside the signal are zero.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::waveform::Waveform;

const STOPBAND_DB: f64 = 80.0;
const CUTOFF: f64 = 0.475;
const TRANSITION: f64 = 0.05;
/// Phase tables larger than this are evaluated per output sample instead.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    /// cycles per input sample
    fc: f64,
    /// taps either side of the output position
    half: usize,
    half_width: f64,
    beta: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(from: u32, to: u32) -> Self {
        let min = from.min(to) as f64;
        let fc = CUTOFF * min / from as f64;
        let dw = 2.0 * PI * TRANSITION * min / from as f64;
        let taps = (STOPBAND_DB - 8.0) / (2.285 * dw);
        let half_width = (taps / 2.0).ceil().max(2.0);
        let beta = 0.1102 * (STOPBAND_DB - 8.7);
        Kernel {
            fc,
            half: half_width as usize,
            half_width,
            beta,
            i0_beta: bessel_i0(beta),
        }
    }

    fn value(&self, tau: f64) -> f64 {
        let r = tau / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = 2.0 * self.fc * tau;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (PI * arg).sin() / (PI * arg)
        };
        let window = bessel_i0(self.beta * (1.0 - r * r).sqrt()) / self.i0_beta;
        2.0 * self.fc * sinc * window
    }

    /// Weights for inputs `i + j`, `j = 1 − half ..= half`, where the output
    /// lies `frac` input samples after `i`; normalised to sum to one.
    fn phase(&self, frac: f64) -> Vec<f64> {
        let h = self.half as isize;
        let mut w: Vec<f64> = (1 - h..=h).map(|j| self.value(j as f64 - frac)).collect();
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        w
    }
}

/// Resample to `to` Hz. Output length is `floor(len · to / from)`.
pub fn resample(signal: &Waveform, to: u32) -> Result<Waveform> {
    let from = signal.sample_rate;
    if from == 0 || to == 0 {
        return Err(Error::validation("sample_rate", "rates must be > 0"));
    }
    if from == to {
        return Ok(signal.clone());
    }
    let g = gcd(from as u64, to as u64);
    let (up, down) = (to as u64 / g, from as u64 / g);
    let out_len = (signal.len() as u64 * up / down) as usize;
    let kernel = Kernel::new(from, to);
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES).then(|| {
        (0..up)
            .map(|p| kernel.phase(p as f64 / up as f64))
            .collect()
    });

    let x = &signal.samples;
    let len = x.len() as isize;
    let h = kernel.half as isize;
    let mut out = Vec::with_capacity(out_len);
    let mut owned;
    for n in 0..out_len as u64 {
        let pos = n * down;
        let i = (pos / up) as isize;
        let p = pos % up;
        let w: &[f64] = match &table {
            Some(t) => &t[p as usize],
            None => {
                owned = kernel.phase(p as f64 / up as f64);
                &owned
            }
        };
        let start = i + 1 - h;
        let mut acc = 0.0;
        if start >= 0 && start + w.len() as isize <= len {
            let s = &x[start as usize..start as usize + w.len()];
            for (a, b) in s.iter().zip(w) {
                acc += a * b;
            }
        } else {
            for (j, b) in w.iter().enumerate() {
                let k = start + j as isize;
                if (0..len).contains(&k) {
                    acc += x[k as usize] * b;
                }
            }
        }
        out.push(acc);
    }
    Ok(Waveform::new(out, to))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, fs: u32, n: usize, amp: f64) -> Waveform {
        Waveform::new(
            (0..n)
                .map(|i| amp * (2.0 * PI * f * i as f64 / fs as f64).sin())
                .collect(),
            fs,
        )
    }

    /// Amplitude of the `f` component by least squares over the interior.
    fn amplitude(x: &[f64], f: f64, fs: f64) -> f64 {
        let (mut s, mut c) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * f * i as f64 / fs;
            s += v * ph.sin();
            c += v * ph.cos();
        }
        2.0 * (s * s + c * c).sqrt() / x.len() as f64
    }

    #[test]
    fn same_rate_is_identity() {
        let x = sine(440.0, 22050, 1000, 0.3);
        assert_eq!(resample(&x, 22050).unwrap(), x);
    }

    #[test]
    fn rejects_zero_rates() {
        assert!(resample(&Waveform::new(vec![0.0; 4], 0), 10).is_err());
        assert!(resample(&Waveform::new(vec![0.0; 4], 10), 0).is_err());
    }

    #[test]
    fn length_rounds_down() {
        let x = Waveform::new(vec![0.0; 22051], 22050);
        assert_eq!(resample(&x, 10000).unwrap().len(), 10000);
        let x = Waveform::new(vec![0.0; 1001], 16000);
        assert_eq!(resample(&x, 44100).unwrap().len(), 2759);
    }

    #[test]
    fn sine_keeps_frequency_and_amplitude() {
        let x = sine(1000.0, 22050, 22050, 0.5);
        let y = resample(&x, 10000).unwrap();
        let interior = &y.samples[500..9500];
        // fit against a 1 kHz sine starting at sample 500
        let a = amplitude(interior, 1000.0, 10000.0);
        assert!((20.0 * (a / 0.5).log10()).abs() < 0.1, "{a}");
        let direct = sine(1000.0, 10000, 10000, 0.5);
        let err: f64 = interior
            .iter()
            .zip(&direct.samples[500..9500])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn passband_ripple_below_tenth_db() {
        for (from, to) in [(22050, 10000), (10000, 22050), (16000, 10000)] {
            let min = from.min(to) as f64;
            for frac in [0.05, 0.2, 0.35, 0.44] {
                let f = frac * min;
                let x = sine(f, from, from as usize * 2, 0.5);
                let y = resample(&x, to).unwrap();
                let n = y.len();
                let a = amplitude(&y.samples[n / 4..3 * n / 4], f, to as f64);
                assert!(
                    (20.0 * (a / 0.5).log10()).abs() < 0.1,
                    "{from}->{to} {f}: {a}"
                );
            }
        }
    }

    #[test]
    fn stopband_is_attenuated() {
        let x = sine(7000.0, 22050, 22050, 0.5);
        let y = resample(&x, 10000).unwrap();
        assert!(y.samples[1000..9000].iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn dc_preserved() {
        let x = Waveform::new(vec![0.7; 5000], 22050);
        for to in [10000, 16000, 44100, 22051] {
            let y = resample(&x, to).unwrap();
            let n = y.len();
            for v in &y.samples[n / 10..9 * n / 10] {
                assert!((v - 0.7).abs() < 1e-3, "{to}: {v}");
            }
        }
    }
}
