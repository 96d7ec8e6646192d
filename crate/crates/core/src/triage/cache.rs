use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::TriageError;
use crate::repository::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheEntry {
    pub query: String,
    pub hits: u64,
    pub fetched_at: DateTime<Utc>,
}

/// Query → hit-count cache persisted as one JSON object per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PopularityCache {
    entries: BTreeMap<String, CacheEntry>,
}

impl PopularityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry for `query` if it was fetched within `window` of `now`.
    pub fn fresh(&self, query: &str, now: DateTime<Utc>, window: Duration) -> Option<&CacheEntry> {
        self.entries.get(query).filter(|e| now - e.fetched_at <= window)
    }

    pub fn insert(&mut self, entry: CacheEntry) {
        self.entries.insert(entry.query.clone(), entry);
    }

    pub fn load(path: &Path) -> Result<Self, TriageError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(TriageError::io(path, e)),
        };
        let mut cache = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheEntry = serde_json::from_str(line).map_err(|e| TriageError::Cache {
                line: i + 1,
                message: e.to_string(),
            })?;
            cache.insert(entry);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<(), TriageError> {
        let mut out = String::new();
        for e in self.entries.values() {
            out.push_str(&serde_json::to_string(e).expect("cache entry serializes"));
            out.push('\n');
        }
        Ok(write_atomic(path, out.as_bytes())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(secs: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(secs, 0).unwrap()
    }

    #[test]
    fn freshness_window() {
        let mut c = PopularityCache::new();
        c.insert(CacheEntry { query: "q".into(), hits: 4, fetched_at: at(0) });
        assert_eq!(c.fresh("q", at(3600), Duration::hours(1)).map(|e| e.hits), Some(4));
        assert!(c.fresh("q", at(3601), Duration::hours(1)).is_none());
        assert!(c.fresh("other", at(0), Duration::hours(1)).is_none());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        assert!(PopularityCache::load(&path).unwrap().is_empty());
        let mut c = PopularityCache::new();
        c.insert(CacheEntry { query: "\"Brezel\" Germany".into(), hits: 12, fetched_at: at(100) });
        c.save(&path).unwrap();
        assert_eq!(PopularityCache::load(&path).unwrap(), c);
    }
}
