//! ERB-scale geometry of the auditory filters (Glasberg & Moore).

use crate::error::{Error, Result};

/// ERB-number in Cam of frequency `f` (Hz).
pub fn erb_number(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(cam(f))
}

/// Equivalent rectangular bandwidth in Hz of the auditory filter centred on `f`.
pub fn erb_bandwidth(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(bandwidth(f))
}

/// Inverse of [`erb_number`].
pub fn cam_to_hz(cam: f64) -> f64 {
    (10f64.powf(cam / 21.4) - 1.0) / 0.00437
}

#[inline]
pub(crate) fn cam(f: f64) -> f64 {
    21.4 * (0.00437 * f + 1.0).log10()
}

#[inline]
pub(crate) fn bandwidth(f: f64) -> f64 {
    24.7 * (4.37 * f / 1000.0 + 1.0)
}

fn check_frequency(f: f64) -> Result<()> {
    if !(f >= 0.0) || !f.is_finite() {
        return Err(Error::validation(
            "frequency",
            format!("must be finite and >= 0, got {f}"),
        ));
    }
    Ok(())
}
