//! Specific loudness of uniformly exciting noise for normal and impaired ears.
//!
//! A compact variant of the Moore–Glasberg loudness model for cochlear
//! hearing loss. Excitation is expressed in power units where 0 dB SPL is 1.
//! For an ear with outer/inner hair-cell losses `HL_OHC`, `HL_IHC`:
//!
//! ```text
//! E_att  = E · 10^(−HL_IHC/10)
//! G_ear  = G(f) · 10^(−HL_OHC/10)          G(f) = min(1, 10^((T_Q(1 kHz) − T_Q(f))/10))
//! A      = 2 · G(f) · E_TQ(f)
//! N'_c   = C · [(G_ear·E_att + A)^α − A^α]  · (2E/(E + E_TQ,ear))^1.5 when E < E_TQ,ear
//! N'_p   = C · max(0, (E_att/D)^½ − (E_TQ,ear·10^(−HL_IHC/10)/D)^½)
//! N'     = max(N'_c, N'_p)
//! ```
//!
//! `E_TQ,ear = E_TQ · 10^(HL/10)` is the elevated threshold. `A` is fixed by
//! the normal ear, so the compressive branch of an impaired ear reaches the
//! normal threshold loudness exactly at `T_Q + HL`. The passive branch carries
//! recruitment: at high levels only the inner hair-cell loss remains.

pub mod erb;
pub mod filter;
pub mod threshold;

use std::sync::Arc;

use crate::audiogram::{self, Audiogram};
use crate::error::{Error, Result};
use crate::spectrum::{Calibration, LongTermSpectrum, SILENCE_FLOOR_DB};

pub use erb::{cam_to_hz, erb_bandwidth, erb_number};
pub use filter::{auditory_filter_levels, ErbIntegrator, FrameSpectrum};
pub use threshold::ThresholdTable;

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_PASSIVE_DENOMINATOR: f64 = 1.04e6;
pub const MIN_LEVEL: f64 = -30.0;
pub const MAX_LEVEL: f64 = 140.0;
const MAX_FREQUENCY: f64 = 24000.0;
const STEEPENING_EXPONENT: f64 = 1.5;

/// Channel spacing of the loudness summation grid.
pub const CAM_STEP: f64 = 0.25;
/// Lowest channel of the summation grid.
pub const GRID_LOW_HZ: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct EarModel {
    audiogram: Option<Arc<Audiogram>>,
    thresholds: Arc<ThresholdTable>,
    alpha: f64,
    passive_denominator: f64,
    scale_c: f64,
}

impl EarModel {
    pub fn normal() -> Self {
        EarModel {
            audiogram: None,
            thresholds: ThresholdTable::standard(),
            alpha: DEFAULT_ALPHA,
            passive_denominator: DEFAULT_PASSIVE_DENOMINATOR,
            scale_c: 1.0,
        }
    }

    pub fn impaired(audiogram: Audiogram) -> Self {
        EarModel {
            audiogram: Some(Arc::new(audiogram)),
            ..EarModel::normal()
        }
    }

    pub fn with_scale_c(mut self, scale_c: f64) -> Result<Self> {
        if !(scale_c > 0.0) || !scale_c.is_finite() {
            return Err(Error::validation(
                "scale_c",
                format!("must be > 0, got {scale_c}"),
            ));
        }
        self.scale_c = scale_c;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::validation(
                "alpha",
                format!("must be in (0, 1), got {alpha}"),
            ));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_passive_denominator(mut self, d: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::validation(
                "passive_denominator",
                format!("must be > 0, got {d}"),
            ));
        }
        self.passive_denominator = d;
        Ok(self)
    }

    pub fn with_thresholds(mut self, table: ThresholdTable) -> Self {
        self.thresholds = Arc::new(table);
        self
    }

    pub fn audiogram(&self) -> Option<&Audiogram> {
        self.audiogram.as_deref()
    }

    pub fn scale_c(&self) -> f64 {
        self.scale_c
    }

    /// Short description used in table headers and manifests.
    pub fn identifier(&self) -> String {
        match &self.audiogram {
            None => "normal".to_string(),
            Some(a) => format!("impaired:{}", &a.digest()[..16]),
        }
    }

    /// Normal absolute threshold T_Q(f) in dB SPL.
    pub fn normal_threshold(&self, f: f64) -> f64 {
        self.thresholds.at(f)
    }

    /// Threshold of this ear: T_Q(f) + HL(f).
    pub fn threshold(&self, f: f64) -> f64 {
        self.normal_threshold(f) + self.hl(f)
    }

    fn hl(&self, f: f64) -> f64 {
        match &self.audiogram {
            None => 0.0,
            Some(a) => a.interpolate(erb::cam(f)),
        }
    }

    /// Precompute everything that depends on frequency only.
    pub fn channel(&self, f: f64) -> Channel {
        let (hl_ohc, hl_ihc) = match &self.audiogram {
            None => (0.0, 0.0),
            Some(a) => audiogram::split(a.interpolate(erb::cam(f)), a.ohc_fraction()),
        };
        let t_q = self.thresholds.at(f);
        let t_q_1k = self.thresholds.at(1000.0);
        let e_tq = db_to_power(t_q);
        let g = db_to_power(t_q_1k - t_q).min(1.0);
        let a = 2.0 * g * e_tq;
        let h_ohc = db_to_power(-hl_ohc);
        let h_ihc = db_to_power(-hl_ihc);
        let e_tq_ear = e_tq * db_to_power(hl_ohc + hl_ihc);
        Channel {
            scale_c: self.scale_c,
            alpha: self.alpha,
            a,
            a_pow: a.powf(self.alpha),
            gain_ratio: g * h_ohc * h_ihc / a,
            e_tq_ear,
            passive_scale: (h_ihc / self.passive_denominator).sqrt(),
            passive_floor: e_tq_ear.sqrt(),
        }
    }

    /// Specific loudness in sone/Cam of a uniformly exciting noise whose
    /// auditory-filter level at `f` is `level` dB SPL.
    pub fn specific_loudness(&self, level: f64, f: f64) -> Result<f64> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::validation(
                "level",
                format!("{level} dB SPL outside [{MIN_LEVEL}, {MAX_LEVEL}]"),
            ));
        }
        if !(f > 0.0 && f <= MAX_FREQUENCY) {
            return Err(Error::validation(
                "frequency",
                format!("{f} Hz outside (0, {MAX_FREQUENCY}]"),
            ));
        }
        Ok(self.channel(f).specific_loudness(level))
    }

    /// Total loudness in sone from channel levels on the summation grid.
    pub fn loudness_of_levels(&self, levels: &ChannelLevels, shift_db: f64) -> f64 {
        levels
            .centres
            .iter()
            .zip(&levels.levels)
            .map(|(&f, &l)| {
                let l = if l <= SILENCE_FLOOR_DB {
                    l
                } else {
                    l + shift_db
                };
                self.channel(f).specific_loudness(l)
            })
            .sum::<f64>()
            * CAM_STEP
    }

    /// Total loudness in sone of a calibrated waveform.
    pub fn total_loudness(
        &self,
        signal: &[f64],
        sample_rate: f64,
        cal: Calibration,
    ) -> Result<f64> {
        let levels = ChannelLevels::of_signal(signal, sample_rate, cal)?;
        Ok(self.loudness_of_levels(&levels, 0.0))
    }
}

/// Frequency-only terms of the loudness function for one channel.
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    scale_c: f64,
    alpha: f64,
    a: f64,
    a_pow: f64,
    /// G·h_ohc·h_ihc / A
    gain_ratio: f64,
    e_tq_ear: f64,
    passive_scale: f64,
    passive_floor: f64,
}

impl Channel {
    /// Unchecked; levels at or below the silence floor give zero.
    #[inline]
    pub fn specific_loudness(&self, level: f64) -> f64 {
        let e = if level <= SILENCE_FLOOR_DB {
            0.0
        } else {
            db_to_power(level)
        };
        self.from_excitation(e)
    }

    #[inline]
    pub fn from_excitation(&self, e: f64) -> f64 {
        // (G·E_att + A)^α − A^α without cancellation at small excitation
        let mut compressive = self.a_pow * (self.alpha * (self.gain_ratio * e).ln_1p()).exp_m1();
        if e < self.e_tq_ear {
            compressive *= (2.0 * e / (e + self.e_tq_ear)).powf(STEEPENING_EXPONENT);
        }
        let passive = self.passive_scale * (e.sqrt() - self.passive_floor).max(0.0);
        self.scale_c * compressive.max(passive)
    }

    pub fn threshold_excitation(&self) -> f64 {
        self.e_tq_ear
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// Long-term auditory-filter levels on the 0.25-Cam summation grid.
#[derive(Debug, Clone)]
pub struct ChannelLevels {
    pub centres: Vec<f64>,
    pub levels: Vec<f64>,
}

impl ChannelLevels {
    pub const FFT_SIZE: usize = 1024;

    pub fn of_signal(signal: &[f64], sample_rate: f64, cal: Calibration) -> Result<Self> {
        let lts = LongTermSpectrum::compute(signal, sample_rate, Self::FFT_SIZE)?;
        Ok(Self::of_spectrum(&lts, cal))
    }

    pub fn of_spectrum(lts: &LongTermSpectrum, cal: Calibration) -> Self {
        let mut integ = ErbIntegrator::cam_grid(
            GRID_LOW_HZ,
            lts.sample_rate / 2.0,
            CAM_STEP,
            lts.power.len(),
            lts.bin_hz(),
        );
        let mut levels = vec![0.0; integ.len()];
        integ.levels(&lts.power, cal.mean_square_offset(), &mut levels);
        ChannelLevels {
            centres: integ.centres().to_vec(),
            levels,
        }
    }
}

#[inline]
pub(crate) fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sloping() -> Audiogram {
        Audiogram::new(
            vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0],
            vec![10.0, 15.0, 30.0, 50.0, 65.0, 70.0],
            0.9,
        )
        .unwrap()
    }

    fn flat(hl: f64) -> Audiogram {
        Audiogram::new(vec![250.0, 8000.0], vec![hl, hl], 0.9).unwrap()
    }

    /// Level at which `listener` reaches `target` loudness, by fine scan.
    fn scan_level(listener: &EarModel, f: f64, target: f64) -> f64 {
        let ch = listener.channel(f);
        let mut l = MIN_LEVEL;
        while l <= MAX_LEVEL {
            if ch.specific_loudness(l) >= target {
                return l;
            }
            l += 0.001;
        }
        MAX_LEVEL
    }

    #[test]
    fn grows_with_level() {
        let ear = EarModel::normal();
        assert!(
            ear.specific_loudness(60.0, 1000.0).unwrap()
                > ear.specific_loudness(40.0, 1000.0).unwrap()
        );
    }

    #[test]
    fn high_level_near_passive_value() {
        // (1e10 / 1.04e6)^0.5 = 98.06; the compressive branch is 98.72 here
        let n = EarModel::normal().specific_loudness(100.0, 1000.0).unwrap();
        assert!((n - 98.06).abs() / 98.06 < 0.01, "{n}");
        let scaled = EarModel::normal().with_scale_c(3.0).unwrap();
        let n3 = scaled.specific_loudness(100.0, 1000.0).unwrap();
        assert!((n3 / n - 3.0).abs() < 1e-12);
    }

    #[test]
    fn impaired_below_normal() {
        let nh = EarModel::normal();
        let hi = EarModel::impaired(flat(60.0));
        for f in [250.0, 1000.0, 4000.0] {
            let mut l = 0.0;
            while l <= 90.0 {
                let a = hi.specific_loudness(l, f).unwrap();
                let b = nh.specific_loudness(l, f).unwrap();
                assert!(a < b, "{f} Hz {l} dB: {a} >= {b}");
                l += 0.5;
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let ear = EarModel::normal();
        assert!(ear.specific_loudness(-31.0, 1000.0).is_err());
        assert!(ear.specific_loudness(141.0, 1000.0).is_err());
        assert!(ear.specific_loudness(60.0, 0.0).is_err());
        assert!(ear.specific_loudness(60.0, 30000.0).is_err());
        assert!(EarModel::normal().with_alpha(1.0).is_err());
        assert!(EarModel::normal().with_scale_c(0.0).is_err());
        assert!(EarModel::normal().with_passive_denominator(-1.0).is_err());
    }

    #[test]
    fn strictly_increasing_on_grid() {
        let ears = [
            EarModel::normal(),
            EarModel::impaired(sloping()),
            EarModel::impaired(flat(0.0)),
            EarModel::impaired(flat(120.0)),
        ];
        let freqs = [50.0, 125.0, 500.0, 1000.0, 3000.0, 8000.0, 11025.0];
        for ear in &ears {
            for &f in &freqs {
                let ch = ear.channel(f);
                let mut prev = ch.specific_loudness(-20.0);
                let mut l = -19.5;
                while l <= 130.0 {
                    let n = ch.specific_loudness(l);
                    assert!(n > prev, "{} {f} Hz {l} dB", ear.identifier());
                    prev = n;
                    l += 0.5;
                }
            }
        }
    }

    #[test]
    fn zero_loss_equals_normal_exactly() {
        let nh = EarModel::normal();
        let zl = EarModel::impaired(flat(0.0));
        let mut f = 20.0;
        while f < 12000.0 {
            let mut l = -30.0;
            while l <= 140.0 {
                assert_eq!(
                    nh.specific_loudness(l, f).unwrap().to_bits(),
                    zl.specific_loudness(l, f).unwrap().to_bits()
                );
                l += 2.5;
            }
            f *= 1.3;
        }
    }

    #[test]
    fn scale_c_is_a_pure_factor() {
        let base = EarModel::impaired(sloping());
        let doubled = base.clone().with_scale_c(2.0).unwrap();
        let odd = base.clone().with_scale_c(0.046871).unwrap();
        for f in [100.0, 1000.0, 6000.0] {
            let mut l = -30.0;
            while l <= 140.0 {
                let n = base.specific_loudness(l, f).unwrap();
                assert_eq!(doubled.specific_loudness(l, f).unwrap(), 2.0 * n);
                let m = odd.specific_loudness(l, f).unwrap();
                assert!((m - 0.046871 * n).abs() <= 1e-15 * m.abs().max(1e-300));
                l += 1.0;
            }
        }
    }

    #[test]
    fn recruitment_bounds() {
        let nh = EarModel::normal();
        let hi = EarModel::impaired(flat(60.0));
        for f in [250.0, 1000.0, 2000.0, 4000.0, 8000.0] {
            let target = nh.channel(f).specific_loudness(110.0);
            let l_star = scan_level(&hi, f, target);
            assert!(
                l_star - 110.0 <= 0.1 * 60.0 + 3.0,
                "{f}: {}",
                l_star - 110.0
            );
            let low = nh.normal_threshold(f) + 5.0;
            let target = nh.channel(f).specific_loudness(low);
            let l_star = scan_level(&hi, f, target);
            assert!(l_star - low >= 60.0 - 5.0, "{f}: {}", l_star - low);
        }
    }

    #[test]
    fn threshold_elevation() {
        let nh = EarModel::normal();
        for a in [sloping(), flat(60.0), flat(120.0)] {
            let hi = EarModel::impaired(a.clone());
            for &f in a.frequencies() {
                let t_q = nh.normal_threshold(f);
                let target = nh.channel(f).specific_loudness(t_q);
                let l = scan_level(&hi, f, target);
                let expect = t_q + a.hl_at(f).unwrap();
                assert!((l - expect).abs() <= 3.0, "{f}: {l} vs {expect}");
            }
        }
    }

    #[test]
    fn total_loudness_behaviour() {
        let fs = 22050.0;
        let cal = Calibration::default();
        let nh = EarModel::normal();
        assert_eq!(nh.total_loudness(&vec![0.0; 4096], fs, cal).unwrap(), 0.0);
        assert!(nh.total_loudness(&[0.0; 100], fs, cal).is_err());

        let x: Vec<f64> = (0..22050)
            .map(|n| 0.05 * (2.0 * std::f64::consts::PI * 700.0 * n as f64 / fs).sin())
            .collect();
        let louder: Vec<f64> = x.iter().map(|v| v * 10f64.powf(0.5)).collect();
        let n1 = nh.total_loudness(&x, fs, cal).unwrap();
        let n2 = nh.total_loudness(&louder, fs, cal).unwrap();
        assert!(n2 > n1 && n1 > 0.0);
        let hi = EarModel::impaired(sloping());
        assert!(hi.total_loudness(&x, fs, cal).unwrap() <= n1);
    }
}
