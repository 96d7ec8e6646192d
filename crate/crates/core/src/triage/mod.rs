//! Popularity triage: rank generated candidates by search hit counts and
//! route the least popular share to human validation.

mod cache;
mod select;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheEntry, PopularityCache};
pub use select::{select_bottom_fraction, selection_size, InvalidFraction, RankedCandidate};

use crate::net::{SearchEngine, SearchError};
use crate::repository::{
    normalize_name, ConceptId, CountryCode, CountryProfiles, CulturalArtifact, Source, Status, Store, StoreError,
};

/// origin_meta key set when no hit count could be measured.
pub const UNAVAILABLE_KEY: &str = "popularity_unavailable";

pub const DEFAULT_QUERY_TEMPLATE: &str = "\"{name}\" {country}";

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("popularity cache line {line}: {message}")]
    Cache { line: usize, message: String },
    #[error("search quota exhausted after {fetched} new lookups; {remaining} remain, rerun to resume")]
    Paused { fetched: usize, remaining: usize },
    #[error("search credential: {0}")]
    Credential(String),
    #[error("artifact {0} is not an LLM candidate")]
    NotCandidate(String),
    #[error("country {0} has no profile")]
    UnknownCountry(String),
    #[error(transparent)]
    Fraction(#[from] InvalidFraction),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl TriageError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TriageError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriageConfig {
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_template")]
    pub query_template: String,
    #[serde(default = "default_freshness")]
    pub freshness_days: i64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_fraction() -> f64 {
    0.30
}

fn default_template() -> String {
    DEFAULT_QUERY_TEMPLATE.into()
}

fn default_freshness() -> i64 {
    30
}

fn default_workers() -> usize {
    4
}

impl Default for TriageConfig {
    fn default() -> Self {
        TriageConfig {
            fraction: default_fraction(),
            query_template: default_template(),
            freshness_days: default_freshness(),
            workers: default_workers(),
        }
    }
}

impl TriageConfig {
    pub fn freshness(&self) -> Duration {
        Duration::days(self.freshness_days)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PopularityRecord {
    pub artifact_id: String,
    pub query: String,
    pub hits: u64,
    pub fetched_at: DateTime<Utc>,
    pub unavailable: bool,
    pub from_cache: bool,
}

pub fn render_query(template: &str, name_en: &str, country_name: &str) -> String {
    template.replace("{name}", name_en).replace("{country}", country_name)
}

/// Looks up one candidate's hit count, consulting and filling `cache`.
///
/// A failed lookup yields an unavailable record with zero hits, which is not
/// cached. Quota exhaustion and missing credentials are returned as errors.
pub fn fetch_popularity(
    artifact: &CulturalArtifact,
    country_name: &str,
    engine: &dyn SearchEngine,
    cache: &Mutex<PopularityCache>,
    config: &TriageConfig,
    now: DateTime<Utc>,
) -> Result<PopularityRecord, TriageError> {
    if artifact.source != Source::LlmGenerated {
        return Err(TriageError::NotCandidate(artifact.id.clone()));
    }
    let query = render_query(&config.query_template, &artifact.name_en, country_name);
    if let Some(hit) = cache.lock().expect("cache lock").fresh(&query, now, config.freshness()) {
        return Ok(PopularityRecord {
            artifact_id: artifact.id.clone(),
            query,
            hits: hit.hits,
            fetched_at: hit.fetched_at,
            unavailable: false,
            from_cache: true,
        });
    }
    match engine.total_results(&query) {
        Ok(hits) => {
            cache.lock().expect("cache lock").insert(CacheEntry {
                query: query.clone(),
                hits,
                fetched_at: now,
            });
            Ok(PopularityRecord {
                artifact_id: artifact.id.clone(),
                query,
                hits,
                fetched_at: now,
                unavailable: false,
                from_cache: false,
            })
        }
        Err(SearchError::Unavailable(msg)) => {
            log::warn!("popularity for {:?} unavailable: {msg}", artifact.name_en);
            Ok(PopularityRecord {
                artifact_id: artifact.id.clone(),
                query,
                hits: 0,
                fetched_at: now,
                unavailable: true,
                from_cache: false,
            })
        }
        Err(SearchError::QuotaExhausted) => Err(TriageError::Paused { fetched: 0, remaining: 1 }),
        Err(SearchError::Credential(v)) => Err(TriageError::Credential(v)),
    }
}

/// Candidates awaiting triage: generated, pending, and not yet scored.
pub fn untriaged(store: &Store) -> Vec<&CulturalArtifact> {
    store
        .filter(None, None, Some(&[Status::PendingValidation]))
        .into_iter()
        .filter(|a| a.source == Source::LlmGenerated && a.popularity.is_none())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PairTriage {
    pub country: String,
    pub concept: String,
    pub candidates: usize,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TriageReport {
    pub lookups: usize,
    pub cache_hits: usize,
    pub unavailable: usize,
    pub pairs: Vec<PairTriage>,
}

impl TriageReport {
    pub fn selected_total(&self) -> usize {
        self.pairs.iter().map(|p| p.selected.len()).sum()
    }
}

/// Scores every untriaged candidate, then marks the bottom fraction of each
/// (country, concept) list for validation and the rest heuristically accepted.
///
/// Nothing in the store changes unless every lookup completed; on quota
/// exhaustion the cache keeps finished lookups and the call returns `Paused`.
pub fn triage_store(
    store: &mut Store,
    profiles: &CountryProfiles,
    engine: &dyn SearchEngine,
    cache: &Mutex<PopularityCache>,
    config: &TriageConfig,
    now: DateTime<Utc>,
) -> Result<TriageReport, TriageError> {
    selection_size(1, config.fraction)?;
    let pending: Vec<CulturalArtifact> = untriaged(store).into_iter().cloned().collect();
    let mut names = BTreeMap::new();
    for a in &pending {
        let p = profiles
            .get(&a.country)
            .ok_or_else(|| TriageError::UnknownCountry(a.country.to_string()))?;
        names.insert(a.country.clone(), p.name.clone());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .expect("thread pool");
    let paused = AtomicBool::new(false);
    let results: Vec<Option<Result<PopularityRecord, TriageError>>> = pool.install(|| {
        pending
            .par_iter()
            .map(|a| {
                if paused.load(Ordering::SeqCst) {
                    return None;
                }
                let r = fetch_popularity(a, &names[&a.country], engine, cache, config, now);
                if matches!(r, Err(TriageError::Paused { .. })) {
                    paused.store(true, Ordering::SeqCst);
                }
                Some(r)
            })
            .collect()
    });

    let mut report = TriageReport::default();
    let mut records = Vec::with_capacity(results.len());
    let mut remaining = 0usize;
    for r in results {
        match r {
            None | Some(Err(TriageError::Paused { .. })) => remaining += 1,
            Some(Err(e)) => return Err(e),
            Some(Ok(rec)) => records.push(rec),
        }
    }
    let fetched = records.iter().filter(|r| !r.from_cache && !r.unavailable).count();
    if remaining > 0 {
        return Err(TriageError::Paused { fetched, remaining });
    }
    report.lookups = fetched;
    report.cache_hits = records.iter().filter(|r| r.from_cache).count();
    report.unavailable = records.iter().filter(|r| r.unavailable).count();

    let mut lists: BTreeMap<(CountryCode, ConceptId), Vec<RankedCandidate>> = BTreeMap::new();
    for (a, rec) in pending.iter().zip(&records) {
        let name_key = a.match_key().unwrap_or_else(|_| normalize_name(&a.name_en).unwrap_or_default());
        lists.entry((a.country.clone(), a.concept)).or_default().push(RankedCandidate {
            artifact_id: a.id.clone(),
            name_key,
            hits: rec.hits,
        });
    }
    let mut selected_ids = std::collections::HashSet::new();
    for ((country, concept), list) in &lists {
        let picked = select_bottom_fraction(list, config.fraction)?;
        let ids: Vec<String> = picked.into_iter().map(|c| c.artifact_id).collect();
        selected_ids.extend(ids.iter().cloned());
        report.pairs.push(PairTriage {
            country: country.to_string(),
            concept: concept.as_str().to_string(),
            candidates: list.len(),
            selected: ids,
        });
    }

    let mut next = store.clone();
    for rec in &records {
        let selected = selected_ids.contains(&rec.artifact_id);
        next.modify(&rec.artifact_id, |a| {
            a.popularity = Some(rec.hits);
            if rec.unavailable {
                a.origin_meta.insert(UNAVAILABLE_KEY.into(), "true".into());
            }
            a.status = if selected { Status::PendingValidation } else { Status::HeuristicAccepted };
        })?;
    }
    *store = next;
    Ok(report)
}
