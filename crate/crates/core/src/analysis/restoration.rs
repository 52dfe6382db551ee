use std::io::Write;

use crate::error::{Error, Result};
use crate::loudness::{erb_number, ChannelLevels, EarModel};
use crate::spectrum::Calibration;
use crate::waveform::Waveform;

/// Per-channel comparison of impaired loudness of a processed signal with
/// normal loudness of the original, on the 0.25-Cam grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RestorationReport {
    pub cams: Vec<f64>,
    pub centres_hz: Vec<f64>,
    /// N′ of the original for a normal ear.
    pub reference: Vec<f64>,
    /// N′ of the processed signal for the impaired ear.
    pub achieved: Vec<f64>,
    /// (achieved − reference) / reference, or `None` where the original is
    /// below the normal threshold in that channel.
    pub errors: Vec<Option<f64>>,
    /// Median of |error| over scored channels.
    pub median_abs_error: f64,
    /// 90th percentile of |error| over scored channels.
    pub p90_abs_error: f64,
}

impl RestorationReport {
    pub fn scored_channels(&self) -> usize {
        self.errors.iter().flatten().count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "cam,err_rel")?;
        for (c, e) in self.cams.iter().zip(&self.errors) {
            if let Some(e) = e {
                writeln!(out, "{c},{e}")?;
            }
        }
        out.flush()
    }
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Compare long-term specific loudness of `processed` through `impaired`
/// with that of `original` through a normal ear. Channels where the
/// original lies below the normal threshold are not scored.
pub fn loudness_restoration_report(
    original: &Waveform,
    processed: &Waveform,
    impaired: &EarModel,
    cal: Calibration,
) -> Result<RestorationReport> {
    if original.len() != processed.len() {
        return Err(Error::LengthMismatch(original.len(), processed.len()));
    }
    if original.sample_rate != processed.sample_rate {
        return Err(Error::SampleRateMismatch {
            signal: processed.sample_rate,
            table: original.sample_rate,
        });
    }
    let fs = original.sample_rate as f64;
    let orig = ChannelLevels::of_signal(&original.samples, fs, cal)?;
    let proc = ChannelLevels::of_signal(&processed.samples, fs, cal)?;
    let normal = EarModel::normal();
    let n = orig.centres.len();
    let mut report = RestorationReport {
        cams: Vec::with_capacity(n),
        centres_hz: orig.centres.clone(),
        reference: Vec::with_capacity(n),
        achieved: Vec::with_capacity(n),
        errors: Vec::with_capacity(n),
        median_abs_error: f64::NAN,
        p90_abs_error: f64::NAN,
    };
    for (i, &f) in orig.centres.iter().enumerate() {
        let r = normal.channel(f).specific_loudness(orig.levels[i]);
        let a = impaired.channel(f).specific_loudness(proc.levels[i]);
        report.cams.push(erb_number(f)?);
        report.reference.push(r);
        report.achieved.push(a);
        let audible = orig.levels[i] >= normal.normal_threshold(f) && r > 0.0;
        report.errors.push(audible.then(|| (a - r) / r));
    }
    let mut abs: Vec<f64> = report.errors.iter().flatten().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    report.median_abs_error = percentile(&abs, 0.5);
    report.p90_abs_error = percentile(&abs, 0.9);
    Ok(report)
}
