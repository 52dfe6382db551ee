use std::sync::{Arc, OnceLock};

use super::erb;
use crate::error::{Error, Result};

const STANDARD_TABLE: &str = include_str!("../../data/free_field_threshold_v1.txt");

/// Absolute threshold of hearing T_Q(f) in dB SPL.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    cams: Vec<f64>,
    levels: Vec<f64>,
}

impl ThresholdTable {
    /// The bundled free-field table.
    pub fn standard() -> Arc<ThresholdTable> {
        static TABLE: OnceLock<Arc<ThresholdTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                Arc::new(ThresholdTable::parse(STANDARD_TABLE).expect("bundled table parses"))
            })
            .clone()
    }

    /// Whitespace-separated `frequency_hz threshold_db` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cams = Vec::new();
        let mut levels = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::Parse(format!("threshold table line {}: '{line}'", lineno + 1))
                })
            };
            let f = parse(it.next())?;
            let t = parse(it.next())?;
            let c = erb::cam(f);
            if cams.last().is_some_and(|&last| c <= last) {
                return Err(Error::Parse(format!(
                    "threshold table line {}: frequencies must increase",
                    lineno + 1
                )));
            }
            cams.push(c);
            levels.push(t);
        }
        if cams.len() < 2 {
            return Err(Error::Parse(
                "threshold table needs at least two rows".into(),
            ));
        }
        Ok(ThresholdTable { cams, levels })
    }

    pub fn at(&self, f: f64) -> f64 {
        let cam = erb::cam(f);
        let n = self.cams.len();
        if cam <= self.cams[0] {
            return self.levels[0];
        }
        if cam >= self.cams[n - 1] {
            return self.levels[n - 1];
        }
        let hi = self.cams.partition_point(|&c| c <= cam);
        let lo = hi - 1;
        let t = (cam - self.cams[lo]) / (self.cams[hi] - self.cams[lo]);
        self.levels[lo] + t * (self.levels[hi] - self.levels[lo])
    }
}
