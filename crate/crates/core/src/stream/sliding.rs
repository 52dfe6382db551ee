use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_inputs, GainStage, ProcessorConfig};
use crate::error::Result;
use crate::gain::GainTable;
use crate::spectrum::Window;
use crate::waveform::Waveform;

/// Rectangular sliding DFT over the most recent `n` samples, bins `0..=n/2`.
///
/// Each push costs O(n). Every `resync_interval` pushes the spectrum is
/// recomputed exactly from the ring buffer to bound recursion drift.
pub struct SlidingDft {
    n: usize,
    ring: Vec<f64>,
    /// index of the oldest sample
    pos: usize,
    spectrum: Vec<Complex64>,
    twiddle: Vec<Complex64>,
    resync_interval: usize,
    since_resync: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SlidingDft {
    pub fn new(n: usize, resync_interval: usize) -> Self {
        let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let twiddle = (0..=n / 2)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        SlidingDft {
            n,
            ring: vec![0.0; n],
            pos: 0,
            spectrum: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
            twiddle,
            resync_interval: resync_interval.max(1),
            since_resync: 0,
            fft,
            buf: vec![Complex64::new(0.0, 0.0); n],
            scratch,
        }
    }

    pub fn push(&mut self, x: f64) {
        let oldest = self.ring[self.pos];
        self.ring[self.pos] = x;
        self.pos = (self.pos + 1) % self.n;
        self.since_resync += 1;
        if self.since_resync >= self.resync_interval {
            self.resync();
            return;
        }
        let delta = x - oldest;
        for (s, w) in self.spectrum.iter_mut().zip(&self.twiddle) {
            *s = (*s + delta) * w;
        }
    }

    /// Exact transform of the current window.
    pub fn resync(&mut self) {
        let (tail, head) = self.ring.split_at(self.pos);
        for (b, &x) in self.buf.iter_mut().zip(head.iter().chain(tail)) {
            *b = Complex64::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        self.spectrum.copy_from_slice(&self.buf[..=self.n / 2]);
        self.since_resync = 0;
    }

    /// Unwindowed spectrum, bins `0..=n/2`.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Spectrum of the Hann-windowed frame via the 3-tap kernel
    /// (−¼, ½, −¼), using conjugate symmetry at both ends.
    pub fn hann_into(&self, out: &mut [Complex64]) {
        let s = &self.spectrum;
        let last = s.len() - 1;
        for (k, o) in out.iter_mut().enumerate().take(last + 1) {
            let prev = if k == 0 { s[1].conj() } else { s[k - 1] };
            let next = if k == last {
                s[last - 1].conj()
            } else {
                s[k + 1]
            };
            *o = s[k] * 0.5 - (prev + next) * 0.25;
        }
    }
}

/// Streaming form of the sliding path; owns the per-stream state.
///
/// Output lags input by `window_length/2 − 1` samples; [`finish`](Self::finish)
/// flushes the tail so the total output length equals the input length.
/// `T` is any handle to the table, such as `&GainTable` or `Arc<GainTable>`.
pub struct StreamProcessor<T: Deref<Target = GainTable>> {
    table: T,
    window: Window,
    sdft: SlidingDft,
    stage: GainStage,
    windowed: Vec<Complex64>,
    lookahead: usize,
    pushed: usize,
    emitted: usize,
}

impl<T: Deref<Target = GainTable>> StreamProcessor<T> {
    pub fn new(table: T, cfg: &ProcessorConfig) -> Result<Self> {
        let probe = Waveform::new(vec![0.0], table.sample_rate());
        check_inputs(&probe, &table, cfg)?;
        let n = cfg.window_length;
        let stage = GainStage::new(cfg, table.sample_rate());
        Ok(StreamProcessor {
            table,
            window: cfg.window,
            sdft: SlidingDft::new(n, cfg.resync_interval),
            stage,
            windowed: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
            lookahead: n / 2 - 1,
            pushed: 0,
            emitted: 0,
        })
    }

    /// Feed one input sample; returns an output sample once the lookahead
    /// is filled.
    pub fn push(&mut self, x: f64) -> Option<f64> {
        self.sdft.push(x);
        self.pushed += 1;
        if self.pushed <= self.lookahead {
            return None;
        }
        self.emitted += 1;
        Some(self.render())
    }

    fn render(&mut self) -> f64 {
        match self.window {
            Window::Hann => {
                self.sdft.hann_into(&mut self.windowed);
                self.stage.center_sample(&self.table, &self.windowed)
            }
            Window::Rect => self.stage.center_sample(&self.table, self.sdft.spectrum()),
        }
    }

    /// Input samples consumed before the first output.
    pub fn latency(&self) -> usize {
        self.lookahead
    }

    /// Gains in dB applied to each bin for the latest output sample.
    pub fn last_gains_db(&self) -> &[f64] {
        self.stage.gains_db()
    }

    /// Flush remaining outputs for the samples pushed so far.
    pub fn finish(mut self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pushed - self.emitted);
        while let Some(y) = self.flush_one() {
            out.push(y);
        }
        out
    }

    fn flush_one(&mut self) -> Option<f64> {
        if self.emitted == self.pushed {
            return None;
        }
        self.sdft.push(0.0);
        self.emitted += 1;
        Some(self.render())
    }
}

/// Sliding-DFT implementation with the same output contract as
/// [`super::process`].
pub fn process_sliding(
    signal: &Waveform,
    table: &GainTable,
    cfg: &ProcessorConfig,
) -> Result<Waveform> {
    process_with_probe(signal, table, cfg, |_, _| {})
}

/// [`process_sliding`], calling `probe(index, gains_db)` after every output
/// sample with the per-bin gains that produced it.
pub fn process_with_probe<F: FnMut(usize, &[f64])>(
    signal: &Waveform,
    table: &GainTable,
    cfg: &ProcessorConfig,
    mut probe: F,
) -> Result<Waveform> {
    check_inputs(signal, table, cfg)?;
    let mut proc = StreamProcessor::new(table, cfg)?;
    let mut out = Vec::with_capacity(signal.len());
    for &x in &signal.samples {
        if let Some(y) = proc.push(x) {
            probe(out.len(), proc.last_gains_db());
            out.push(y);
        }
    }
    while let Some(y) = proc.flush_one() {
        probe(out.len(), proc.last_gains_db());
        out.push(y);
    }
    Ok(Waveform::new(out, signal.sample_rate))
}
