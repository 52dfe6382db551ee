//! Mono WAV input and output.
//!
//! Reads 16-bit PCM and 32-bit IEEE float; writes either format depending on
//! the [`WritePolicy`].

use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::Waveform;

const PCM16_SCALE: f64 = 32768.0;

/// How samples beyond full scale are handled on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WritePolicy {
    /// 32-bit float, written unchanged.
    #[default]
    Float,
    /// 16-bit PCM, out-of-range samples clipped and counted.
    Clip,
    /// 16-bit PCM, scaled down to full-scale peak when it would clip.
    Normalize,
}

impl FromStr for WritePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(WritePolicy::Float),
            "clip" => Ok(WritePolicy::Clip),
            "normalize" => Ok(WritePolicy::Normalize),
            other => Err(Error::validation(
                "write_policy",
                format!("unknown policy '{other}' (float|clip|normalize)"),
            )),
        }
    }
}

impl WritePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            WritePolicy::Float => "float",
            WritePolicy::Clip => "clip",
            WritePolicy::Normalize => "normalize",
        }
    }
}

/// Outcome of a write.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WriteReport {
    /// Samples outside [−1, 1] before conversion.
    pub clip_count: usize,
    /// Gain applied by [`WritePolicy::Normalize`], 0 dB otherwise.
    pub applied_gain_db: f64,
}

/// Errors after the file is open describe its contents.
fn read_error(path: &Path, e: hound::Error) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(format!("writing {}", path.display()), io),
        other => Error::Wav {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader =
        WavReader::new(std::io::BufReader::new(file)).map_err(|e| read_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Wav {
            path: path.to_path_buf(),
            message: format!(
                "{} channels; only mono is supported, downmix first (for example `sox in.wav -c 1 out.wav`)",
                spec.channels
            ),
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>(),
        (fmt, bits) => {
            return Err(Error::Wav {
                path: path.to_path_buf(),
                message: format!(
                    "unsupported encoding {fmt:?} {bits}-bit; need 16-bit PCM or 32-bit float"
                ),
            })
        }
    }
    .map_err(|e| read_error(path, e))?;
    Ok(Waveform::new(samples, spec.sample_rate))
}

fn to_pcm16(x: f64) -> i16 {
    (x * PCM16_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(path: &Path, signal: &Waveform, policy: WritePolicy) -> Result<WriteReport> {
    let clip_count = signal.samples.iter().filter(|x| x.abs() > 1.0).count();
    let spec = |bits, fmt| WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: bits,
        sample_format: fmt,
    };
    let werr = |e| write_error(path, e);
    let mut report = WriteReport {
        clip_count,
        applied_gain_db: 0.0,
    };
    match policy {
        WritePolicy::Float => {
            let mut w = WavWriter::create(path, spec(32, SampleFormat::Float)).map_err(werr)?;
            for &x in &signal.samples {
                w.write_sample(x as f32).map_err(werr)?;
            }
            w.finalize().map_err(werr)?;
        }
        WritePolicy::Clip => {
            let mut w = WavWriter::create(path, spec(16, SampleFormat::Int)).map_err(werr)?;
            for &x in &signal.samples {
                w.write_sample(to_pcm16(x)).map_err(werr)?;
            }
            w.finalize().map_err(werr)?;
        }
        WritePolicy::Normalize => {
            let peak = signal.peak();
            let limit = i16::MAX as f64 / PCM16_SCALE;
            let g = if peak > limit { limit / peak } else { 1.0 };
            report.applied_gain_db = 20.0 * g.log10();
            report.clip_count = 0;
            let mut w = WavWriter::create(path, spec(16, SampleFormat::Int)).map_err(werr)?;
            for &x in &signal.samples {
                w.write_sample(to_pcm16(x * g)).map_err(werr)?;
            }
            w.finalize().map_err(werr)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Waveform {
        Waveform::new(
            (0..2000)
                .map(|i| (i as f64 / 1000.0 - 1.0) * 0.999)
                .collect(),
            22050,
        )
    }

    #[test]
    fn float_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = Waveform::new(
            ramp().samples.iter().map(|&v| v as f32 as f64).collect(),
            22050,
        );
        write_wav(&p, &x, WritePolicy::Float).unwrap();
        let y = read_wav(&p).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn pcm16_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = ramp();
        let r = write_wav(&p, &x, WritePolicy::Clip).unwrap();
        assert_eq!(r.clip_count, 0);
        let y = read_wav(&p).unwrap();
        let err = x
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 2f64.powi(-15), "{err}");
    }

    #[test]
    fn clipping_is_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = Waveform::new(vec![0.5, 1.5, -2.0, 0.0, 1.0], 16000);
        assert_eq!(write_wav(&p, &x, WritePolicy::Clip).unwrap().clip_count, 2);
        let y = read_wav(&p).unwrap();
        assert_eq!(y.samples[2], -1.0);
        assert!((y.samples[1] - 32767.0 / 32768.0).abs() < 1e-12);

        let r = write_wav(&p, &x, WritePolicy::Normalize).unwrap();
        assert_eq!(r.clip_count, 0);
        assert!(r.applied_gain_db < -6.0);
        let y = read_wav(&p).unwrap();
        assert!(y.peak() <= 1.0);
        // float output keeps the overs
        assert_eq!(write_wav(&p, &x, WritePolicy::Float).unwrap().clip_count, 2);
        assert_eq!(read_wav(&p).unwrap().samples[2], -2.0);
    }

    #[test]
    fn rejects_stereo_and_other_codecs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 22050,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        match read_wav(&p) {
            Err(Error::Wav { message, .. }) => assert!(message.contains("mono")),
            other => panic!("{other:?}"),
        }

        let spec = WavSpec {
            channels: 1,
            sample_rate: 22050,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Wav { .. })));
    }

    #[test]
    fn malformed_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.wav");
        std::fs::write(&p, b"RIFF\x00\x00\x00\x00WAVEjunk").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Wav { .. })));
        assert!(matches!(
            read_wav(&dir.path().join("none.wav")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn policy_names() {
        for p in [
            WritePolicy::Float,
            WritePolicy::Clip,
            WritePolicy::Normalize,
        ] {
            assert_eq!(p.as_str().parse::<WritePolicy>().unwrap(), p);
        }
        assert!("loud".parse::<WritePolicy>().is_err());
    }
}
