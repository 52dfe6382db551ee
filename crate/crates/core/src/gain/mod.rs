//! Frequency × level gain lookup table.
//!
//! Each cell holds the level change that maps the loudness a reference ear
//! perceives at (f, L) onto the listener ear: the listener level with equal
//! specific loudness, minus L.

mod codec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audiogram::Audiogram;
use crate::error::{Error, Result};
use crate::loudness::{EarModel, MAX_LEVEL, MIN_LEVEL};

pub use codec::{CODEC_VERSION, MAGIC};

/// Bisection stops once the bracket is narrower than this.
pub const SOLVER_TOLERANCE_DB: f64 = 1e-4;
/// Columns below this frequency reuse its gains.
pub const LOW_FREQUENCY_LIMIT_HZ: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Normal-hearing loudness restored for the impaired listener.
    Compensate,
    /// Impaired-listener loudness mapped back onto normal hearing.
    Inverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Compensate => "compensate",
            Direction::Inverse => "inverse",
        }
    }
}

/// Level axis of the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelGrid {
    pub min: f64,
    pub step: f64,
    pub count: usize,
}

impl Default for LevelGrid {
    fn default() -> Self {
        LevelGrid {
            min: -20.0,
            step: 1.0,
            count: 141,
        }
    }
}

impl LevelGrid {
    pub fn level(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.level(self.count - 1)
    }
}

/// Bin layout and clamping limits for a table build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSpec {
    pub sample_rate: u32,
    pub window_length: usize,
    pub levels: LevelGrid,
    pub max_gain: f32,
    pub min_gain: f32,
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            sample_rate: 22050,
            window_length: 1024,
            levels: LevelGrid::default(),
            max_gain: 60.0,
            min_gain: -80.0,
        }
    }
}

impl TableSpec {
    pub fn with_sample_rate(sample_rate: u32) -> Self {
        TableSpec {
            sample_rate,
            ..TableSpec::default()
        }
    }

    pub fn n_bins(&self) -> usize {
        self.window_length / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.window_length as f64
    }

    fn validate(&self) -> Result<()> {
        if self.window_length < 4 || !self.window_length.is_power_of_two() {
            return Err(Error::validation(
                "window_length",
                "must be a power of two >= 4",
            ));
        }
        if self.sample_rate == 0 {
            return Err(Error::validation("sample_rate", "must be > 0"));
        }
        if self.levels.count < 2 || !(self.levels.step > 0.0) {
            return Err(Error::validation(
                "levels",
                "need >= 2 levels with positive step",
            ));
        }
        if !(self.min_gain < self.max_gain) {
            return Err(Error::validation("min_gain", "must be below max_gain"));
        }
        Ok(())
    }
}

/// Which end of the search range an unattainable target was clamped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualLoudness {
    pub level: f64,
    pub saturated: Option<Saturation>,
}

/// Listener level with the same specific loudness at `f` as `level` has for
/// the reference ear, found by bisection over [−30, 140] dB SPL.
pub fn equal_loudness_level(
    level: f64,
    f: f64,
    reference: &EarModel,
    listener: &EarModel,
) -> Result<EqualLoudness> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::validation(
            "level",
            format!("{level} dB SPL outside [{MIN_LEVEL}, {MAX_LEVEL}]"),
        ));
    }
    if !(f > 0.0) {
        return Err(Error::validation(
            "frequency",
            format!("must be > 0, got {f}"),
        ));
    }
    let target = reference.channel(f).specific_loudness(level);
    Ok(solve(target, level, &listener.channel(f)))
}

fn solve(target: f64, start: f64, listener: &crate::loudness::Channel) -> EqualLoudness {
    if listener.specific_loudness(start) == target {
        return EqualLoudness {
            level: start,
            saturated: None,
        };
    }
    let (mut lo, mut hi) = (MIN_LEVEL, MAX_LEVEL);
    if listener.specific_loudness(hi) < target {
        return EqualLoudness {
            level: hi,
            saturated: Some(Saturation::High),
        };
    }
    if listener.specific_loudness(lo) > target {
        return EqualLoudness {
            level: lo,
            saturated: Some(Saturation::Low),
        };
    }
    while hi - lo > SOLVER_TOLERANCE_DB {
        let mid = 0.5 * (lo + hi);
        if listener.specific_loudness(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    EqualLoudness {
        level: 0.5 * (lo + hi),
        saturated: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub(crate) direction: Direction,
    pub(crate) spec: TableSpec,
    /// Row-major: one row of `levels.count` gains per bin.
    pub(crate) gains: Vec<f32>,
    pub(crate) saturated: Vec<bool>,
    pub(crate) source_ear: String,
    pub(crate) target_ear: String,
}

impl GainTable {
    /// Table for one audiogram: compensation maps normal hearing onto the
    /// impaired ear, inverse maps it back.
    pub fn for_audiogram(
        audiogram: &Audiogram,
        direction: Direction,
        spec: TableSpec,
    ) -> Result<Self> {
        let normal = EarModel::normal();
        let impaired = EarModel::impaired(audiogram.clone());
        match direction {
            Direction::Compensate => build_table(&normal, &impaired, direction, spec),
            Direction::Inverse => build_table(&impaired, &normal, direction, spec),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn spec(&self) -> &TableSpec {
        &self.spec
    }

    pub fn sample_rate(&self) -> u32 {
        self.spec.sample_rate
    }

    pub fn n_bins(&self) -> usize {
        self.spec.n_bins()
    }

    pub fn levels(&self) -> &LevelGrid {
        &self.spec.levels
    }

    pub fn source_ear(&self) -> &str {
        &self.source_ear
    }

    pub fn target_ear(&self) -> &str {
        &self.target_ear
    }

    pub fn gains(&self) -> &[f32] {
        &self.gains
    }

    pub fn column(&self, bin: usize) -> &[f32] {
        let n = self.spec.levels.count;
        &self.gains[bin * n..(bin + 1) * n]
    }

    pub fn cell(&self, bin: usize, level_index: usize) -> f32 {
        self.gains[bin * self.spec.levels.count + level_index]
    }

    pub fn is_saturated(&self, bin: usize, level_index: usize) -> bool {
        self.saturated[bin * self.spec.levels.count + level_index]
    }

    pub fn saturated_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.spec.bin_hz()
    }

    /// Gain in dB at frequency `f` and level `level`, bilinear in
    /// (bin, level); both axes clamp at the grid ends.
    pub fn lookup_gain(&self, f: f64, level: f64) -> f64 {
        let last = (self.n_bins() - 1) as f64;
        let pos = (f / self.spec.bin_hz()).clamp(0.0, last);
        let k0 = (pos.floor() as usize).min(self.n_bins() - 2);
        let w = pos - k0 as f64;
        let g0 = self.lookup_bin(k0, level);
        if w == 0.0 {
            return g0;
        }
        let g1 = self.lookup_bin(k0 + 1, level);
        g0 + w * (g1 - g0)
    }

    /// Gain in dB of bin `bin` at `level`, linear in level.
    #[inline]
    pub fn lookup_bin(&self, bin: usize, level: f64) -> f64 {
        let grid = &self.spec.levels;
        let col = self.column(bin);
        let pos = ((level - grid.min) / grid.step).clamp(0.0, (grid.count - 1) as f64);
        let i = (pos as usize).min(grid.count - 2);
        let w = pos - i as f64;
        let (a, b) = (col[i] as f64, col[i + 1] as f64);
        if w == 0.0 {
            a
        } else {
            a + w * (b - a)
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        codec::decode(bytes)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        codec::write_csv(self, out)
    }

    /// SHA-256 of the binary encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

/// Build the table for `listener` relative to `reference`.
///
/// Compensation requires a normal-hearing reference, inversion a
/// normal-hearing listener. Unattainable targets are clamped and flagged.
pub fn build_table(
    reference: &EarModel,
    listener: &EarModel,
    direction: Direction,
    spec: TableSpec,
) -> Result<GainTable> {
    spec.validate()?;
    let normal_side = match direction {
        Direction::Compensate => ("reference", reference),
        Direction::Inverse => ("listener", listener),
    };
    if normal_side.1.audiogram().is_some_and(|a| !a.is_zero_loss()) {
        return Err(Error::validation(
            normal_side.0,
            format!(
                "{} table needs a normal-hearing {}",
                direction.as_str(),
                normal_side.0
            ),
        ));
    }
    let grid = spec.levels;
    let bin_hz = spec.bin_hz();
    let columns: Vec<(Vec<f32>, Vec<bool>)> = (0..spec.n_bins())
        .into_par_iter()
        .map(|k| {
            let f = (k as f64 * bin_hz).max(LOW_FREQUENCY_LIMIT_HZ);
            let ref_ch = reference.channel(f);
            let lis_ch = listener.channel(f);
            (0..grid.count)
                .map(|i| {
                    let level = grid.level(i);
                    let sol = solve(ref_ch.specific_loudness(level), level, &lis_ch);
                    let gain =
                        (sol.level - level).clamp(spec.min_gain as f64, spec.max_gain as f64);
                    (gain as f32, sol.saturated.is_some())
                })
                .unzip()
        })
        .collect();
    let mut gains = Vec::with_capacity(spec.n_bins() * grid.count);
    let mut saturated = Vec::with_capacity(gains.capacity());
    for (g, s) in columns {
        gains.extend(g);
        saturated.extend(s);
    }
    Ok(GainTable {
        direction,
        spec,
        gains,
        saturated,
        source_ear: reference.identifier(),
        target_ear: listener.identifier(),
    })
}
