//! Content-addressed store for per-frequency S-matrices.
//!
//! Keys are SHA-256 digests of a canonical JSON rendering of every input
//! that affects a result. Values keep the raw IEEE bit patterns so that a
//! hit is bit-identical to the fresh computation. Writes go to a temporary
//! file that is then renamed into place.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::em::{Mat4, SParamRow};
use crate::error::{Error, Result};

/// Bumped whenever the solver changes in a way that invalidates old entries.
pub const CACHE_VERSION: u32 = 1;

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("cache keys are plain data");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Record {
    version: u32,
    frequency_bits: u64,
    /// Row-major (re, im) bit patterns.
    s: Vec<[u64; 2]>,
}

impl Record {
    fn from_row(row: &SParamRow) -> Self {
        Record {
            version: CACHE_VERSION,
            frequency_bits: row.frequency_ghz.to_bits(),
            s: row.s.iter().flatten().map(|z| [z.re.to_bits(), z.im.to_bits()]).collect(),
        }
    }

    fn to_row(&self) -> Option<SParamRow> {
        if self.version != CACHE_VERSION || self.s.len() != 16 {
            return None;
        }
        let s: Mat4 = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let [re, im] = self.s[4 * i + j];
                Complex64::new(f64::from_bits(re), f64::from_bits(im))
            })
        });
        Some(SParamRow { frequency_ghz: f64::from_bits(self.frequency_bits), s })
    }
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct ResultCache {
    root: PathBuf,
}

impl ResultCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(ResultCache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    /// Cached row for `key`; unreadable or stale entries count as misses.
    pub fn get(&self, key: &str) -> Option<SParamRow> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str::<Record>(&text).ok()?.to_row()
    }

    pub fn put(&self, key: &str, row: &SParamRow) -> Result<()> {
        let path = self.path(key);
        let dir = path.parent().expect("entry paths have a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let text = serde_json::to_string(&Record::from_row(row)).expect("records serialize");
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::io(&path, e)
        })
    }

    pub fn len(&self) -> usize {
        let Ok(dirs) = fs::read_dir(&self.root) else { return 0 };
        dirs.flatten()
            .filter_map(|d| fs::read_dir(d.path()).ok())
            .flat_map(|entries| entries.flatten())
            .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(f: f64) -> SParamRow {
        SParamRow {
            frequency_ghz: f,
            s: std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new(0.1 / (1 + i + j) as f64, -1.0 / 3.0 + j as f64))),
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::open(dir.path()).unwrap();
        let key = content_hash(&("scene", 8.55));
        assert!(cache.get(&key).is_none());
        let r = row(8.55);
        cache.put(&key, &r).unwrap();
        let back = cache.get(&key).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(back.s[i][j].re.to_bits(), r.s[i][j].re.to_bits());
                assert_eq!(back.s[i][j].im.to_bits(), r.s[i][j].im.to_bits());
            }
        }
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn keys_separate_inputs() {
        assert_ne!(content_hash(&(1.0, 2.0)), content_hash(&(1.0, 2.0000000000000004)));
        assert_eq!(content_hash(&[1, 2, 3]), content_hash(&[1, 2, 3]));
        assert_eq!(content_hash(&"abc").len(), 64);
    }

    #[test]
    fn corrupt_entries_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::open(dir.path()).unwrap();
        let key = content_hash(&1);
        cache.put(&key, &row(1.0)).unwrap();
        fs::write(cache.path(&key), "{not json").unwrap();
        assert!(cache.get(&key).is_none());
    }
}
