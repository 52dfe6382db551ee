//! Spectral and loudness analyses of corpora and processed signals.

mod matching;
mod noise;
mod restoration;
mod third_octave;

pub use matching::{match_loudness, GAIN_RANGE_DB};
pub use noise::{speech_shaped_noise, CORRECTION_PASSES};
pub use restoration::{loudness_restoration_report, percentile, RestorationReport};
pub use third_octave::{
    average_spectra, band_edges, band_powers, exact_centre, is_floor, third_octave_spectrum,
    ThirdOctaveSpectrum, MAX_FFT_SIZE, MIN_SAMPLES, NOMINAL_CENTRES_HZ,
};
