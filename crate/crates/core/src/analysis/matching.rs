use crate::error::{Error, Result};
use crate::loudness::{ChannelLevels, EarModel};
use crate::spectrum::Calibration;
use crate::waveform::Waveform;

/// Search range for the matching gain.
pub const GAIN_RANGE_DB: (f64, f64) = (-40.0, 40.0);
const TOLERANCE_DB: f64 = 1e-4;

/// Gain in dB that makes `reference` as loud as `target` for `ear`.
///
/// Loudness is computed from long-term channel levels, so a gain of g dB is
/// a level shift of every channel by g.
pub fn match_loudness(
    reference: &Waveform,
    target: &Waveform,
    ear: &EarModel,
    cal: Calibration,
) -> Result<f64> {
    let min = ChannelLevels::FFT_SIZE;
    for w in [reference, target] {
        if w.len() < min {
            return Err(Error::TooShort { len: w.len(), min });
        }
    }
    let levels = ChannelLevels::of_signal(&reference.samples, reference.sample_rate as f64, cal)?;
    let goal = ear.total_loudness(&target.samples, target.sample_rate as f64, cal)?;
    let loudness = |g: f64| ear.loudness_of_levels(&levels, g);
    let (mut lo, mut hi) = GAIN_RANGE_DB;
    let (n_lo, n_hi) = (loudness(lo), loudness(hi));
    if !(n_lo <= goal && goal <= n_hi) || n_hi == n_lo {
        return Err(Error::NotBracketed(format!(
            "target loudness {goal:.4} sone outside [{n_lo:.4}, {n_hi:.4}] reachable within ±40 dB"
        )));
    }
    while hi - lo > TOLERANCE_DB {
        let mid = 0.5 * (lo + hi);
        if loudness(mid) < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::speech_like;

    #[test]
    fn recovers_known_gains() {
        let x = speech_like(2.0, 22050, 1);
        let ear = EarModel::normal();
        let cal = Calibration::default();
        for g in [-12.0, -6.0, 0.0, 6.0, 6.02, 12.0] {
            let m = match_loudness(&x, &x.scaled(g), &ear, cal).unwrap();
            assert!((m - g).abs() < 0.1, "{g}: {m}");
        }
        assert!(match_loudness(&x, &x, &ear, cal).unwrap().abs() < 0.05);
    }

    #[test]
    fn silence_is_not_bracketed() {
        let x = speech_like(1.0, 22050, 2);
        let z = Waveform::new(vec![0.0; x.len()], 22050);
        let ear = EarModel::normal();
        let cal = Calibration::default();
        assert!(matches!(
            match_loudness(&z, &x, &ear, cal),
            Err(Error::NotBracketed(_))
        ));
        assert!(matches!(
            match_loudness(&x, &z, &ear, cal),
            Err(Error::NotBracketed(_))
        ));
        let short = Waveform::new(vec![0.1; 100], 22050);
        assert!(matches!(
            match_loudness(&short, &x, &ear, cal),
            Err(Error::TooShort { .. })
        ));
    }
}
