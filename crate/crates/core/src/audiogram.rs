//! Listener hearing loss and its outer/inner hair-cell decomposition.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::loudness::erb;

pub const DEFAULT_OHC_FRACTION: f64 = 0.9;
const MIN_FREQUENCY: f64 = 125.0;
const MAX_FREQUENCY: f64 = 16000.0;
const MAX_LOSS: f64 = 120.0;

/// On-disk JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AudiogramDoc {
    frequencies_hz: Vec<f64>,
    hl_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ohc_fraction: Option<f64>,
}

/// Hearing loss in dB HL at a set of audiometric frequencies.
///
/// Immutable once built. Loss between knots is interpolated linearly on the
/// ERB-number axis and held flat outside the measured range.
#[derive(Debug, Clone, PartialEq)]
pub struct Audiogram {
    frequencies: Vec<f64>,
    losses: Vec<f64>,
    cams: Vec<f64>,
    ohc_fraction: f64,
}

impl Audiogram {
    pub fn new(frequencies: Vec<f64>, losses: Vec<f64>, ohc_fraction: f64) -> Result<Self> {
        if frequencies.len() != losses.len() {
            return Err(Error::validation(
                "hl_db",
                format!(
                    "length {} does not match frequencies_hz length {}",
                    losses.len(),
                    frequencies.len()
                ),
            ));
        }
        if frequencies.len() < 2 {
            return Err(Error::validation(
                "frequencies_hz",
                "at least 2 points required",
            ));
        }
        for (i, &f) in frequencies.iter().enumerate() {
            if !(MIN_FREQUENCY..=MAX_FREQUENCY).contains(&f) {
                return Err(Error::validation(
                    format!("frequencies_hz[{i}]"),
                    format!("{f} Hz outside [{MIN_FREQUENCY}, {MAX_FREQUENCY}]"),
                ));
            }
            if i > 0 && f <= frequencies[i - 1] {
                return Err(Error::validation(
                    format!("frequencies_hz[{i}]"),
                    format!(
                        "non-increasing frequencies: {} then {f}",
                        frequencies[i - 1]
                    ),
                ));
            }
        }
        for (i, &hl) in losses.iter().enumerate() {
            if !(0.0..=MAX_LOSS).contains(&hl) {
                return Err(Error::validation(
                    format!("hl_db[{i}]"),
                    format!("{hl} dB HL outside [0, {MAX_LOSS}]"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&ohc_fraction) {
            return Err(Error::validation(
                "ohc_fraction",
                format!("{ohc_fraction} outside [0, 1]"),
            ));
        }
        let cams = frequencies.iter().map(|&f| erb::cam(f)).collect();
        Ok(Audiogram {
            frequencies,
            losses,
            cams,
            ohc_fraction,
        })
    }

    /// Flat 0 dB HL at standard audiometric frequencies.
    pub fn normal() -> Self {
        Audiogram::new(
            vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0],
            vec![0.0; 6],
            DEFAULT_OHC_FRACTION,
        )
        .expect("static audiogram is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AudiogramDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Audiogram::new(
            doc.frequencies_hz,
            doc.hl_db,
            doc.ohc_fraction.unwrap_or(DEFAULT_OHC_FRACTION),
        )
    }

    pub fn to_json(&self) -> String {
        let doc = AudiogramDoc {
            frequencies_hz: self.frequencies.clone(),
            hl_db: self.losses.clone(),
            ohc_fraction: Some(self.ohc_fraction),
        };
        serde_json::to_string(&doc).expect("audiogram serialises")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn ohc_fraction(&self) -> f64 {
        self.ohc_fraction
    }

    pub fn is_zero_loss(&self) -> bool {
        self.losses.iter().all(|&l| l == 0.0)
    }

    /// Hearing loss in dB HL at `f`.
    pub fn hl_at(&self, f: f64) -> Result<f64> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::validation(
                "frequency",
                format!("must be > 0, got {f}"),
            ));
        }
        Ok(self.interpolate(erb::cam(f)))
    }

    pub(crate) fn interpolate(&self, cam: f64) -> f64 {
        let n = self.cams.len();
        if cam <= self.cams[0] {
            return self.losses[0];
        }
        if cam >= self.cams[n - 1] {
            return self.losses[n - 1];
        }
        // first knot strictly above `cam`
        let hi = self.cams.partition_point(|&c| c <= cam);
        let lo = hi - 1;
        let t = (cam - self.cams[lo]) / (self.cams[hi] - self.cams[lo]);
        let (a, b) = (self.losses[lo], self.losses[hi]);
        a + t * (b - a)
    }

    /// Split the loss at `f` into (outer, inner) hair-cell components in dB.
    ///
    /// The two parts sum to `hl_at(f)` exactly.
    pub fn split_hl(&self, f: f64) -> Result<(f64, f64)> {
        let hl = self.hl_at(f)?;
        Ok(split(hl, self.ohc_fraction))
    }
}

/// Compute the larger share by multiplication and the smaller by subtraction;
/// the subtraction is then exact (Sterbenz), so the parts sum back to `hl`.
pub(crate) fn split(hl: f64, ohc_fraction: f64) -> (f64, f64) {
    if ohc_fraction >= 0.5 {
        let ohc = ohc_fraction * hl;
        (ohc, hl - ohc)
    } else {
        let ihc = (1.0 - ohc_fraction) * hl;
        (hl - ihc, ihc)
    }
}
