use std::collections::BTreeMap;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Everything that identifies a request. Its SHA-256 over the JSON encoding
/// is the cache key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub provider: String,
    pub request: String,
    pub id: String,
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_sha256: Option<String>,
}

impl CacheKey {
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("cache key serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub request: CacheKey,
    pub value: Value,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

/// On-disk, content-addressed store: `<root>/<k[0..2]>/<k>.json`.
/// Entries are never rewritten; eviction is manual.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, digest: &str) -> PathBuf {
        self.root.join(&digest[..2]).join(format!("{digest}.json"))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>> {
        let path = self.path_for(&key.digest());
        match std::fs::read(&path) {
            Ok(bytes) => {
                let entry: CacheEntry = serde_json::from_slice(&bytes)?;
                if entry.request != *key {
                    return Err(Error::CacheConflict(entry.key));
                }
                Ok(Some(entry))
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Stores `value` under `key`. Storing the same value twice is a no-op;
    /// storing a different one is [`Error::CacheConflict`].
    pub fn put(&self, key: &CacheKey, value: &Value) -> Result<CacheEntry> {
        let digest = key.digest();
        if let Some(existing) = self.get(key)? {
            return check_same(existing, value);
        }
        let path = self.path_for(&digest);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let entry = CacheEntry {
            key: digest,
            request: key.clone(),
            value: value.clone(),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        serde_json::to_writer_pretty(&mut tmp, &entry)?;
        tmp.write_all(b"\n").map_err(|e| Error::io(tmp.path(), e))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(entry),
            Err(e) if e.error.kind() == ErrorKind::AlreadyExists => {
                // lost a race with another writer
                let existing = self.get(key)?.expect("entry exists after clobber check");
                check_same(existing, value)
            }
            Err(e) => Err(Error::io(path, e.error)),
        }
    }
}

fn check_same(existing: CacheEntry, value: &Value) -> Result<CacheEntry> {
    if existing.value == *value {
        Ok(existing)
    } else {
        Err(Error::CacheConflict(existing.key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn key(id: &str) -> CacheKey {
        CacheKey {
            provider: "p".into(),
            request: "first-pass".into(),
            id: id.into(),
            params: BTreeMap::from([("lang".into(), "ar".into())]),
            context_sha256: None,
        }
    }

    #[test]
    fn put_get_and_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert!(cache.get(&key("u1")).unwrap().is_none());
        cache.put(&key("u1"), &json!("نص")).unwrap();
        let hit = cache.get(&key("u1")).unwrap().unwrap();
        assert_eq!(hit.value, json!("نص"));
        cache.put(&key("u1"), &json!("نص")).unwrap();
        assert!(matches!(
            cache.put(&key("u1"), &json!("other")),
            Err(Error::CacheConflict(_))
        ));
        assert!(cache.get(&key("u2")).unwrap().is_none());
    }

    #[test]
    fn key_covers_every_field() {
        let base = key("u1");
        let mut k = base.clone();
        k.params.insert("temp".into(), "0".into());
        assert_ne!(base.digest(), k.digest());
        let mut k = base.clone();
        k.context_sha256 = Some("ab".into());
        assert_ne!(base.digest(), k.digest());
        let mut k = base.clone();
        k.request = "nbest".into();
        assert_ne!(base.digest(), k.digest());
        assert_eq!(base.digest(), key("u1").digest());
    }
}
