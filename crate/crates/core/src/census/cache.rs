use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::NeighborhoodDistribution;
use crate::error::{invalid, Result};
use crate::rng::{derive, mix64};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "SMALLWORLD_CACHE_DIR";

/// Content-addressed store of limit censuses. Entries are JSON files named
/// by a hash of the serialized request, so a changed parameter never hits a
/// stale entry.
#[derive(Clone, Debug)]
pub struct CensusCache {
    dir: PathBuf,
}

fn content_hash(bytes: &[u8]) -> String {
    let mut lanes = [0x243F_6A88_85A3_08D3u64, 0x1319_8A2E_0370_7344];
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        let w = u64::from_le_bytes(word);
        lanes[0] = mix64(lanes[0] ^ w).rotate_left(17);
        lanes[1] = derive(lanes[1], &[w]);
    }
    let a = derive(lanes[0], &[bytes.len() as u64]);
    let b = derive(lanes[1], &[a]);
    format!("{a:016x}{b:016x}")
}

impl CensusCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `$SMALLWORLD_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, request: &impl Serialize) -> Result<PathBuf> {
        let text = serde_json::to_string(request).map_err(|e| invalid(format!("unserializable cache key: {e}")))?;
        Ok(self.dir.join(format!("census-{}.json", content_hash(text.as_bytes()))))
    }

    /// Returns the cached census for `request`, computing and storing it on a
    /// miss. Unreadable entries are recomputed; write failures are ignored,
    /// since the cache is an optimization only.
    pub fn get_or_compute(
        &self,
        request: &impl Serialize,
        compute: impl FnOnce() -> Result<NeighborhoodDistribution>,
    ) -> Result<NeighborhoodDistribution> {
        let path = self.path_for(request)?;
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(dist) = serde_json::from_str(&text) {
                return Ok(dist);
            }
        }
        let dist = compute()?;
        if fs::create_dir_all(&self.dir).is_ok() {
            if let Ok(text) = serde_json::to_string(&dist) {
                let tmp = path.with_extension("tmp");
                if fs::write(&tmp, text).is_ok() {
                    let _ = fs::rename(&tmp, &path);
                }
            }
        }
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_separate_requests() {
        assert_ne!(content_hash(b"abc"), content_hash(b"abd"));
        assert_ne!(content_hash(b""), content_hash(b"\0"));
        assert_eq!(content_hash(b"same"), content_hash(b"same"));
    }
}
