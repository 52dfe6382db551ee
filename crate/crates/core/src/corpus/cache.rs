use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::audiogram::Audiogram;
use crate::error::{Error, Result};
use crate::gain::{Direction, GainTable, TableSpec, CODEC_VERSION};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "LOUDCOMP_CACHE_DIR";

/// On-disk store of built gain tables, keyed by audiogram and build
/// configuration.
#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TableCache { dir: dir.into() }
    }

    /// `$LOUDCOMP_CACHE_DIR`, else `$XDG_CACHE_HOME/loudcomp`, else
    /// `$HOME/.cache/loudcomp`.
    pub fn from_env() -> Option<Self> {
        let var = |k| {
            std::env::var_os(k)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        };
        var(CACHE_ENV)
            .or_else(|| var("XDG_CACHE_HOME").map(|d| d.join("loudcomp")))
            .or_else(|| var("HOME").map(|d| d.join(".cache").join("loudcomp")))
            .map(TableCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Cache key; changes with the audiogram, direction, table layout,
    /// binary format or tool version.
    pub fn key(audiogram: &Audiogram, direction: Direction, spec: &TableSpec) -> String {
        let material = format!(
            "{}|{}|{}|{}|{}|{:?}",
            env!("CARGO_PKG_VERSION"),
            CODEC_VERSION,
            audiogram.digest(),
            direction.as_str(),
            spec.sample_rate,
            spec,
        );
        hex::encode(Sha256::digest(material.as_bytes()))
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.lcgt"))
    }

    /// Load a cached table or build and store it. Unreadable or mismatched
    /// entries are rebuilt. The flag is true on a cache hit.
    pub fn load_or_build(
        &self,
        audiogram: &Audiogram,
        direction: Direction,
        spec: TableSpec,
    ) -> Result<(GainTable, bool)> {
        let path = self.path_for(&Self::key(audiogram, direction, &spec));
        if let Ok(bytes) = std::fs::read(&path) {
            match GainTable::from_bytes(&bytes) {
                Ok(t) if t.direction() == direction && *t.spec() == spec => return Ok((t, true)),
                Ok(_) => eprintln!(
                    "warning: cache entry {} does not match its key, rebuilding",
                    path.display()
                ),
                Err(e) => eprintln!("warning: discarding cache entry {}: {e}", path.display()),
            }
        }
        let table = GainTable::for_audiogram(audiogram, direction, spec)?;
        self.store(&path, &table)?;
        Ok((table, false))
    }

    fn store(&self, path: &Path, table: &GainTable) -> Result<()> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| Error::io(format!("creating cache dir {}", self.dir.display()), e))?;
        write_atomic(path, &table.to_bytes())
    }
}

/// Write via a sibling temporary file and rename, so readers never see a
/// partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> TableSpec {
        TableSpec {
            sample_rate: 8000,
            window_length: 64,
            ..TableSpec::default()
        }
    }

    #[test]
    fn key_depends_on_inputs() {
        let a = Audiogram::normal();
        let b = Audiogram::new(vec![1000.0, 2000.0], vec![20.0, 20.0], 0.9).unwrap();
        let s = small_spec();
        let k = TableCache::key(&a, Direction::Compensate, &s);
        assert_eq!(k, TableCache::key(&a, Direction::Compensate, &s));
        assert_ne!(k, TableCache::key(&b, Direction::Compensate, &s));
        assert_ne!(k, TableCache::key(&a, Direction::Inverse, &s));
        assert_ne!(
            k,
            TableCache::key(
                &a,
                Direction::Compensate,
                &TableSpec {
                    sample_rate: 16000,
                    ..s
                }
            )
        );
    }

    #[test]
    fn miss_then_hit_then_recover_from_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path().join("c"));
        let a = Audiogram::new(vec![500.0, 4000.0], vec![20.0, 50.0], 0.9).unwrap();
        let (t1, hit) = cache
            .load_or_build(&a, Direction::Compensate, small_spec())
            .unwrap();
        assert!(!hit);
        let (t2, hit) = cache
            .load_or_build(&a, Direction::Compensate, small_spec())
            .unwrap();
        assert!(hit);
        assert_eq!(t1, t2);

        let path = cache.path_for(&TableCache::key(&a, Direction::Compensate, &small_spec()));
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, bytes).unwrap();
        let (t3, hit) = cache
            .load_or_build(&a, Direction::Compensate, small_spec())
            .unwrap();
        assert!(!hit);
        assert_eq!(t3, t1);
    }
}
