//! Binary cache and CSV export of gain tables.
//!
//! Layout (little endian):
//!
//! ```text
//! "LCGT" | version u32 | direction u8 | sample_rate u32 | window_length u32
//! | n_bins u32 | level_min f64 | level_step f64 | n_levels u32
//! | min_gain f32 | max_gain f32 | source_ear str | target_ear str
//! | gains f32[n_bins × n_levels] (row-major by bin)
//! | saturation bitmap u8[ceil(cells / 8)] | crc32 u32
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8. The CRC covers every
//! preceding byte.

use std::io::Write;

use super::{Direction, GainTable, LevelGrid, TableSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LCGT";
pub const CODEC_VERSION: u32 = 1;

pub(super) fn encode(t: &GainTable) -> Vec<u8> {
    let cells = t.gains.len();
    let mut out =
        Vec::with_capacity(64 + cells * 4 + cells / 8 + t.source_ear.len() + t.target_ear.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CODEC_VERSION.to_le_bytes());
    out.push(match t.direction {
        Direction::Compensate => 0,
        Direction::Inverse => 1,
    });
    out.extend_from_slice(&t.spec.sample_rate.to_le_bytes());
    out.extend_from_slice(&(t.spec.window_length as u32).to_le_bytes());
    out.extend_from_slice(&(t.spec.n_bins() as u32).to_le_bytes());
    out.extend_from_slice(&t.spec.levels.min.to_le_bytes());
    out.extend_from_slice(&t.spec.levels.step.to_le_bytes());
    out.extend_from_slice(&(t.spec.levels.count as u32).to_le_bytes());
    out.extend_from_slice(&t.spec.min_gain.to_le_bytes());
    out.extend_from_slice(&t.spec.max_gain.to_le_bytes());
    for s in [&t.source_ear, &t.target_ear] {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    for g in &t.gains {
        out.extend_from_slice(&g.to_le_bytes());
    }
    let mut bitmap = vec![0u8; cells.div_ceil(8)];
    for (i, _) in t.saturated.iter().enumerate().filter(|(_, &s)| s) {
        bitmap[i / 8] |= 1 << (i % 8);
    }
    out.extend_from_slice(&bitmap);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Integrity(format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let n = self.u32(what)? as usize;
        String::from_utf8(self.take(n, what)?.to_vec())
            .map_err(|_| Error::Integrity(format!("{what} is not UTF-8")))
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<GainTable> {
    if bytes.len() < 8 {
        return Err(Error::Integrity("truncated header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Integrity("bad magic, not a gain table".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CODEC_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported version {version} (expected {CODEC_VERSION})"
        )));
    }
    if bytes.len() < 12 {
        return Err(Error::Integrity("truncated before checksum".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());

    let mut r = Reader { buf: body, pos: 8 };
    let direction = match r.take(1, "direction")?[0] {
        0 => Direction::Compensate,
        1 => Direction::Inverse,
        d => return Err(Error::Integrity(format!("unknown direction {d}"))),
    };
    let sample_rate = r.u32("sample_rate")?;
    let window_length = r.u32("window_length")? as usize;
    let n_bins = r.u32("n_bins")? as usize;
    let levels = LevelGrid {
        min: r.f64("level_min")?,
        step: r.f64("level_step")?,
        count: r.u32("n_levels")? as usize,
    };
    let min_gain = r.f32("min_gain")?;
    let max_gain = r.f32("max_gain")?;
    let source_ear = r.string("source_ear")?;
    let target_ear = r.string("target_ear")?;
    if window_length / 2 + 1 != n_bins {
        return Err(Error::Integrity(format!(
            "bin count {n_bins} inconsistent with window length {window_length}"
        )));
    }
    let cells = n_bins
        .checked_mul(levels.count)
        .ok_or_else(|| Error::Integrity("grid too large".into()))?;
    let raw = r.take(cells.saturating_mul(4), "gains")?;
    let gains = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let bitmap = r.take(cells.div_ceil(8), "saturation bitmap")?;
    let saturated = (0..cells)
        .map(|i| bitmap[i / 8] & (1 << (i % 8)) != 0)
        .collect();
    if r.pos != body.len() {
        return Err(Error::Integrity(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }
    let computed = crc32fast::hash(body);
    if computed != stored {
        return Err(Error::Integrity(format!(
            "checksum failure: stored {stored:08x}, computed {computed:08x}"
        )));
    }
    Ok(GainTable {
        direction,
        spec: TableSpec {
            sample_rate,
            window_length,
            levels,
            max_gain,
            min_gain,
        },
        gains,
        saturated,
        source_ear,
        target_ear,
    })
}

pub(super) fn write_csv<W: Write>(t: &GainTable, out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "freq_hz,level_db,gain_db")?;
    for k in 0..t.n_bins() {
        let f = t.bin_frequency(k);
        for (i, g) in t.column(k).iter().enumerate() {
            writeln!(out, "{},{},{}", f, t.spec.levels.level(i), g)?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audiogram::Audiogram;

    fn table() -> GainTable {
        let a = Audiogram::new(
            vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0],
            vec![10.0, 15.0, 30.0, 50.0, 65.0, 70.0],
            0.9,
        )
        .unwrap();
        GainTable::for_audiogram(&a, Direction::Compensate, TableSpec::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let t = table();
        let bytes = t.to_bytes();
        let back = GainTable::from_bytes(&bytes).unwrap();
        assert_eq!(back, t);
        assert!(back
            .gains
            .iter()
            .zip(&t.gains)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn detects_corruption() {
        let bytes = table().to_bytes();

        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 1] ^= 0xff;
        assert!(
            matches!(GainTable::from_bytes(&bad), Err(Error::Integrity(m)) if m.contains("checksum"))
        );

        let mut bad = bytes.clone();
        bad[200] ^= 0x01;
        assert!(
            matches!(GainTable::from_bytes(&bad), Err(Error::Integrity(m)) if m.contains("checksum"))
        );

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(
            matches!(GainTable::from_bytes(&bad), Err(Error::Integrity(m)) if m.contains("magic"))
        );

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(
            matches!(GainTable::from_bytes(&bad), Err(Error::Integrity(m)) if m.contains("version"))
        );

        assert!(matches!(
            GainTable::from_bytes(&bytes[..bytes.len() / 2]),
            Err(Error::Integrity(_))
        ));
        assert!(GainTable::from_bytes(&bytes[..6]).is_err());
    }

    #[test]
    fn csv_shape() {
        let mut buf = Vec::new();
        table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("freq_hz,level_db,gain_db"));
        assert_eq!(lines.count(), 513 * 141);
    }
}
