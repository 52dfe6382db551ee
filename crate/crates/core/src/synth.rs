//! Seeded speech-like test signals.
//!
//! Syllables alternate voiced segments (a jittered glottal pulse train through
//! a parallel formant bank), fricatives (band-passed noise) and pauses, so the
//! long-term spectrum falls with frequency and the envelope is modulated at
//! syllabic rates like running speech. A steady noise floor stands in for
//! the room noise of a recording.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::waveform::Waveform;

/// RMS of the generated signal: 72.5 dB SPL at the default 100 dB full scale.
pub const DEFAULT_RMS: f64 = 0.03;

const VOWELS: [[f64; 3]; 6] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [660.0, 1720.0, 2410.0],
];
const FORMANT_BW: [f64; 4] = [60.0, 90.0, 150.0, 200.0];
const F4: f64 = 3500.0;
const FORMANT_AMP: [f64; 4] = [1.0, 0.7, 0.5, 0.3];
/// Background noise floor relative to the speech RMS.
const FLOOR_DB: f64 = -50.0;

/// Two-pole resonator with unit gain at its centre frequency.
#[derive(Clone, Copy)]
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let freq = freq.min(0.45 * fs);
        let r = (-std::f64::consts::PI * bw / fs).exp();
        let theta = 2.0 * std::f64::consts::PI * freq / fs;
        let a1 = 2.0 * r * theta.cos();
        let a2 = -r * r;
        // |1 − a1·z⁻¹ − a2·z⁻²| at z = e^{iθ}
        let z1 = num_complex::Complex64::from_polar(1.0, -theta);
        let den = (1.0 - a1 * z1 - a2 * z1 * z1).norm();
        Resonator {
            b0: den,
            a1,
            a2,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn raised_cosine_envelope(len: usize, ramp: usize) -> impl Fn(usize) -> f64 {
    let ramp = ramp.min(len / 2).max(1);
    move |i| {
        let edge = i.min(len - 1 - i);
        if edge >= ramp {
            1.0
        } else {
            0.5 - 0.5 * (std::f64::consts::PI * edge as f64 / ramp as f64).cos()
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Scale `seg` to `level_db` re unit RMS, shape its edges and append it.
fn emit(mut seg: Vec<f64>, level_db: f64, ramp: usize, out: &mut Vec<f64>) {
    let r = rms(&seg);
    let g = if r > 0.0 {
        10f64.powf(level_db / 20.0) / r
    } else {
        0.0
    };
    let env = raised_cosine_envelope(seg.len(), ramp);
    for (i, v) in seg.iter_mut().enumerate() {
        *v *= g * env(i);
    }
    out.extend(seg);
}

fn voiced(rng: &mut ChaCha8Rng, len: usize, fs: f64, out: &mut Vec<f64>) {
    let vowel = VOWELS[rng.gen_range(0..VOWELS.len())];
    let mut filters: Vec<Resonator> = vowel
        .iter()
        .chain(std::iter::once(&F4))
        .zip(FORMANT_BW)
        .map(|(&f, bw)| Resonator::new(f * rng.gen_range(0.92..1.08), bw, fs))
        .collect();
    let f0_start = rng.gen_range(95.0..190.0);
    let f0_end = f0_start * rng.gen_range(0.8..1.2);
    let mut phase = 0.0;
    let (mut lp1, mut lp2) = (0.0, 0.0);
    let tilt = (-2.0 * std::f64::consts::PI * 400.0 / fs).exp();
    let mut prev = 0.0;
    let mut source = Vec::with_capacity(len);
    for i in 0..len {
        let f0 = f0_start + (f0_end - f0_start) * i as f64 / len as f64;
        phase += f0 * (1.0 + 0.01 * rng.sample::<f64, _>(StandardNormal)) / fs;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        // glottal roll-off, then lip radiation as a first difference
        lp1 = (1.0 - tilt) * pulse + tilt * lp1;
        lp2 = (1.0 - tilt) * lp1 + tilt * lp2;
        source.push(lp2 - prev);
        prev = lp2;
    }
    let r = rms(&source).max(f64::MIN_POSITIVE);
    let seg = source
        .iter()
        .map(|s| {
            let s = s / r + 0.03 * rng.sample::<f64, _>(StandardNormal);
            filters
                .iter_mut()
                .zip(FORMANT_AMP)
                .map(|(f, a)| a * f.tick(s))
                .sum()
        })
        .collect();
    emit(seg, rng.gen_range(-6.0..3.0), (0.02 * fs) as usize, out);
}

fn fricative(rng: &mut ChaCha8Rng, len: usize, fs: f64, out: &mut Vec<f64>) {
    let centre = rng.gen_range(2500.0..7000.0);
    let mut bp = Resonator::new(centre, centre * 0.5, fs);
    let seg = (0..len)
        .map(|_| {
            let n: f64 = StandardNormal.sample(rng);
            bp.tick(n)
        })
        .collect();
    emit(seg, rng.gen_range(-18.0..-8.0), (0.015 * fs) as usize, out);
}

/// `seconds` of speech-like audio at `sample_rate`, scaled to [`DEFAULT_RMS`].
pub fn speech_like(seconds: f64, sample_rate: u32, seed: u64) -> Waveform {
    let fs = sample_rate as f64;
    let target = (seconds * fs).round().max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target + sample_rate as usize);
    while out.len() < target {
        let roll: f64 = rng.gen();
        let dur = if roll < 0.6 {
            rng.gen_range(0.08..0.25)
        } else if roll < 0.8 {
            rng.gen_range(0.05..0.12)
        } else {
            rng.gen_range(0.03..0.15)
        };
        let len = ((dur * fs) as usize).max(8);
        if roll < 0.6 {
            voiced(&mut rng, len, fs, &mut out);
        } else if roll < 0.8 {
            fricative(&mut rng, len, fs, &mut out);
        } else {
            out.extend(std::iter::repeat_n(0.0, len));
        }
    }
    out.truncate(target);
    let level = rms(&out);
    if level > 0.0 {
        let floor = level * 10f64.powf(FLOOR_DB / 20.0);
        for v in &mut out {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += floor * n;
        }
    }
    let w = Waveform::new(out, sample_rate);
    let level = w.rms();
    if level > 0.0 {
        w.scaled(20.0 * (DEFAULT_RMS / level).log10())
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::LongTermSpectrum;

    #[test]
    fn deterministic_per_seed() {
        let a = speech_like(1.0, 22050, 3);
        let b = speech_like(1.0, 22050, 3);
        let c = speech_like(1.0, 22050, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 22050);
        assert!((a.rms() - DEFAULT_RMS).abs() < 1e-12);
        assert!(a.samples.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn spectrum_falls_with_frequency() {
        let x = speech_like(5.0, 22050, 1);
        let s = LongTermSpectrum::compute(&x.samples, 22050.0, 1024).unwrap();
        let band = |lo: f64, hi: f64| -> f64 {
            (0..s.power.len())
                .filter(|&k| (lo..hi).contains(&(k as f64 * s.bin_hz())))
                .map(|k| s.power[k])
                .sum()
        };
        assert!(band(200.0, 1000.0) > band(1000.0, 2000.0));
        assert!(band(1000.0, 2000.0) > band(4000.0, 8000.0) * 0.5);
        assert!(band(4000.0, 8000.0) > 0.0);
    }
}
