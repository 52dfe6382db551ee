//! Hop-1 spectral gain processing with centre-sample resynthesis.
//!
//! For every output sample the window of `window_length` samples centred on
//! it is transformed, per-bin auditory-filter levels select a gain from the
//! table, and only the centre sample of the inverse transform is kept. That
//! sample is the dot product `(1/N)·Σ_k G_k·X_k·(−1)^k`, so no inverse
//! transform is ever run.
//!
//! [`process`] transforms each frame from scratch; [`process_sliding`]
//! tracks the spectrum with a sliding DFT. Both emit one output per input
//! sample with the signal zero-padded by half a window at each end.

mod sliding;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gain::GainTable;
use crate::loudness::filter::ErbIntegrator;
use crate::spectrum::Window;
use crate::waveform::Waveform;

pub use sliding::{process_sliding, process_with_probe, SlidingDft, StreamProcessor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessorConfig {
    pub window_length: usize,
    pub window: Window,
    pub full_scale_spl: f64,
    /// Sliding path only: samples between exact re-transforms.
    pub resync_interval: usize,
}

impl Default for ProcessorConfig {
    fn default() -> Self {
        ProcessorConfig {
            window_length: 1024,
            window: Window::Hann,
            full_scale_spl: 100.0,
            resync_interval: 4096,
        }
    }
}

impl ProcessorConfig {
    pub fn center_index(&self) -> usize {
        self.window_length / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 4 || !self.window_length.is_power_of_two() {
            return Err(Error::validation(
                "window_length",
                "must be a power of two >= 4",
            ));
        }
        if self.resync_interval == 0 {
            return Err(Error::validation("resync_interval", "must be >= 1"));
        }
        if !self.full_scale_spl.is_finite() {
            return Err(Error::validation("full_scale_spl", "must be finite"));
        }
        Ok(())
    }
}

/// dB added to 10·log10 of summed one-sided raw bin power so that a
/// full-scale sine reads `full_scale_spl` in the filter at its frequency.
pub fn calibration_offset(cfg: &ProcessorConfig) -> f64 {
    let n = cfg.window_length;
    let raw_full_scale = n as f64 * cfg.window.power_sum(n) / 2.0;
    cfg.full_scale_spl - 10.0 * raw_full_scale.log10()
}

const DB_TO_LN_AMPLITUDE: f64 = std::f64::consts::LN_10 / 20.0;

/// Levels, gain lookup and centre-sample synthesis for one frame.
pub(crate) struct GainStage {
    integrator: ErbIntegrator,
    power: Vec<f64>,
    levels: Vec<f64>,
    gains_db: Vec<f64>,
    offset: f64,
    inv_n: f64,
}

impl GainStage {
    pub(crate) fn new(cfg: &ProcessorConfig, sample_rate: u32) -> Self {
        let bins = cfg.window_length / 2 + 1;
        GainStage {
            integrator: ErbIntegrator::per_bin(bins, sample_rate as f64 / cfg.window_length as f64),
            power: vec![0.0; bins],
            levels: vec![0.0; bins],
            gains_db: vec![0.0; bins],
            offset: calibration_offset(cfg),
            inv_n: 1.0 / cfg.window_length as f64,
        }
    }

    /// `half` holds bins `0..=N/2` of the windowed frame spectrum.
    #[inline]
    pub(crate) fn center_sample(&mut self, table: &GainTable, half: &[Complex64]) -> f64 {
        let last = half.len() - 1;
        for (k, (p, x)) in self.power.iter_mut().zip(half).enumerate() {
            let c = if k == 0 || k == last { 1.0 } else { 2.0 };
            *p = c * x.norm_sqr();
        }
        self.integrator
            .levels(&self.power, self.offset, &mut self.levels);
        let mut acc = 0.0;
        for (k, x) in half.iter().enumerate() {
            let g = table.lookup_bin(k, self.levels[k]);
            self.gains_db[k] = g;
            let term = (g * DB_TO_LN_AMPLITUDE).exp() * x.re;
            let c = if k == 0 || k == last { 1.0 } else { 2.0 };
            if k % 2 == 0 {
                acc += c * term;
            } else {
                acc -= c * term;
            }
        }
        acc * self.inv_n
    }

    pub(crate) fn gains_db(&self) -> &[f64] {
        &self.gains_db
    }
}

pub(crate) fn check_inputs(
    signal: &Waveform,
    table: &GainTable,
    cfg: &ProcessorConfig,
) -> Result<()> {
    cfg.validate()?;
    if signal.is_empty() {
        return Err(Error::Empty);
    }
    if signal.sample_rate != table.sample_rate() {
        return Err(Error::SampleRateMismatch {
            signal: signal.sample_rate,
            table: table.sample_rate(),
        });
    }
    if table.spec().window_length != cfg.window_length {
        return Err(Error::validation(
            "window_length",
            format!(
                "processor uses {} samples but the table was built for {}",
                cfg.window_length,
                table.spec().window_length
            ),
        ));
    }
    Ok(())
}

/// Reference implementation: a full windowed transform for every sample.
pub fn process(signal: &Waveform, table: &GainTable, cfg: &ProcessorConfig) -> Result<Waveform> {
    check_inputs(signal, table, cfg)?;
    let n = cfg.window_length;
    let centre = cfg.center_index();
    let window = cfg.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut stage = GainStage::new(cfg, signal.sample_rate);
    let x = &signal.samples;
    let len = x.len() as isize;
    let mut out = Vec::with_capacity(x.len());
    for m in 0..len {
        let start = m - centre as isize;
        for (i, (b, &w)) in buf.iter_mut().zip(&window).enumerate() {
            let j = start + i as isize;
            let v = if (0..len).contains(&j) {
                x[j as usize]
            } else {
                0.0
            };
            *b = Complex64::new(v * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        out.push(stage.center_sample(table, &buf[..=n / 2]));
    }
    Ok(Waveform::new(out, signal.sample_rate))
}
