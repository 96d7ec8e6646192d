use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::artifact::{ConceptId, CountryCode, CulturalArtifact, Source, Status};
use super::StoreError;

/// Partition key: (country, concept, normalized name).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    country: String,
    concept: &'static str,
    name: String,
}

impl RecordKey {
    fn of(a: &CulturalArtifact) -> Result<Self, StoreError> {
        Ok(RecordKey {
            country: a.country.as_str().to_string(),
            concept: a.concept.as_str(),
            name: a.match_key().map_err(|e| StoreError::Invariant {
                id: a.id.clone(),
                violation: e,
            })?,
        })
    }

    pub fn normalized_name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsertOutcome {
    Inserted,
    Merged,
    Unchanged,
}

/// In-memory artifact repository, kept sorted by partition key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    records: BTreeMap<RecordKey, CulturalArtifact>,
    ids: HashMap<String, RecordKey>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CulturalArtifact> {
        self.records.values()
    }

    pub fn get(&self, id: &str) -> Option<&CulturalArtifact> {
        self.ids.get(id).and_then(|k| self.records.get(k))
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.ids.contains_key(id)
    }

    /// Inserts `artifact` or merges it into the record sharing its normalized name.
    pub fn upsert(&mut self, artifact: CulturalArtifact) -> Result<UpsertOutcome, StoreError> {
        artifact.validate().map_err(|violation| StoreError::Invariant {
            id: artifact.id.clone(),
            violation,
        })?;
        let key = RecordKey::of(&artifact)?;
        match self.records.get(&key) {
            None => {
                if let Some(existing) = self.ids.get(&artifact.id) {
                    return Err(StoreError::DuplicateId {
                        id: artifact.id.clone(),
                        existing: existing.name.clone(),
                    });
                }
                self.ids.insert(artifact.id.clone(), key.clone());
                self.records.insert(key, artifact);
                Ok(UpsertOutcome::Inserted)
            }
            Some(stored) => {
                let merged = merge(stored, artifact);
                if &merged == stored {
                    Ok(UpsertOutcome::Unchanged)
                } else {
                    self.records.insert(key, merged);
                    Ok(UpsertOutcome::Merged)
                }
            }
        }
    }

    /// Applies `edit` to the record with `id`, re-keying it when its names change.
    /// If the new name collides with another record the two are merged and the
    /// surviving record keeps the higher-precedence source.
    pub fn modify<F>(&mut self, id: &str, edit: F) -> Result<(), StoreError>
    where
        F: FnOnce(&mut CulturalArtifact),
    {
        let key = self.ids.get(id).cloned().ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
        let mut updated = self.records[&key].clone();
        edit(&mut updated);
        updated.id = id.to_string();
        updated.validate().map_err(|violation| StoreError::Invariant {
            id: id.to_string(),
            violation,
        })?;
        let new_key = RecordKey::of(&updated)?;
        if new_key == key {
            self.records.insert(key, updated);
            return Ok(());
        }
        self.records.remove(&key);
        self.ids.remove(id);
        match self.records.get(&new_key) {
            None => {
                self.ids.insert(id.to_string(), new_key.clone());
                self.records.insert(new_key, updated);
            }
            Some(other) => {
                let merged = merge(other, updated);
                self.records.insert(new_key, merged);
            }
        }
        Ok(())
    }

    pub fn set_status(&mut self, id: &str, status: Status) -> Result<(), StoreError> {
        self.modify(id, |a| a.status = status)
    }

    /// Conjunctive filter; results ordered by normalized name, then country and concept.
    pub fn filter(
        &self,
        country: Option<&CountryCode>,
        concept: Option<ConceptId>,
        statuses: Option<&[Status]>,
    ) -> Vec<&CulturalArtifact> {
        let mut out: Vec<(&RecordKey, &CulturalArtifact)> = self
            .records
            .iter()
            .filter(|(_, a)| country.is_none_or(|c| &a.country == c))
            .filter(|(_, a)| concept.is_none_or(|c| a.concept == c))
            .filter(|(_, a)| statuses.is_none_or(|s| s.contains(&a.status)))
            .collect();
        out.sort_by(|(ka, _), (kb, _)| {
            (&ka.name, &ka.country, ka.concept).cmp(&(&kb.name, &kb.country, kb.concept))
        });
        out.into_iter().map(|(_, a)| a).collect()
    }

    /// Normalized names in one partition.
    pub fn partition_keys(&self, country: &CountryCode, concept: ConceptId) -> Vec<&str> {
        self.records
            .iter()
            .filter(|(k, _)| k.country == country.as_str() && k.concept == concept.as_str())
            .map(|(k, _)| k.name.as_str())
            .collect()
    }

    /// Serializes records one per line in key order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for a in self.records.values() {
            out.push_str(&serde_json::to_string(a).expect("artifact serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, StoreError> {
        let mut store = Store::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| StoreError::Read { line: line_no, source: e })?;
            if line.trim().is_empty() {
                continue;
            }
            let artifact: CulturalArtifact = serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            artifact.validate().map_err(|e| StoreError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            let key = RecordKey::of(&artifact)?;
            if store.records.contains_key(&key) || store.ids.contains_key(&artifact.id) {
                return Err(StoreError::Malformed {
                    line: line_no,
                    message: format!("duplicate record {:?}", artifact.id),
                });
            }
            store.ids.insert(artifact.id.clone(), key.clone());
            store.records.insert(key, artifact);
        }
        Ok(store)
    }

    /// Loads a store; a missing file is an empty store.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        match File::open(path) {
            Ok(f) => Self::from_reader(BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Store::new()),
            Err(e) => Err(StoreError::io(path, e)),
        }
    }

    /// Writes via a temporary file in the same directory, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }
}

/// Replaces `path` with `bytes` without ever exposing a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| StoreError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| StoreError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| StoreError::io(path, e))?;
    tmp.persist(path).map_err(|e| StoreError::io(path, e.error))?;
    Ok(())
}

fn merge(stored: &CulturalArtifact, incoming: CulturalArtifact) -> CulturalArtifact {
    let incoming_wins = incoming.source > stored.source;
    let (mut winner, loser) = if incoming_wins {
        (incoming, stored.clone())
    } else {
        (stored.clone(), incoming)
    };
    winner.id = stored.id.clone();
    for (k, v) in loser.origin_meta {
        winner.origin_meta.entry(k).or_insert(v);
    }
    if winner.name_local.is_none() {
        winner.name_local = loser.name_local;
    }
    if winner.name_en.trim().is_empty() {
        winner.name_en = loser.name_en;
    }
    if winner.localization_mode.is_none() {
        winner.localization_mode = loser.localization_mode;
    }
    if winner.source != Source::LlmGenerated {
        winner.popularity = None;
    }
    winner
}
