use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::closure::{build_class_closure, ClassIndex};
use super::dump::{parse_line, read_chunk, DumpStats, LineKind, WikidataEntity};
use super::schema::{ConceptSchema, MatchRule, SchemaSet};
use super::KbError;
use crate::repository::{
    normalize_text, ConceptId, CountryCode, CountryProfiles, CulturalArtifact, Source, Status, Store, UpsertOutcome,
};

/// A schema with property labels mapped to ids and its class closure built.
#[derive(Debug, Clone)]
pub struct ResolvedSchema {
    pub concept: ConceptId,
    pub rule: MatchRule,
    edge_properties: Vec<String>,
    instance_property: String,
    required_claim: Option<String>,
    country_links: Vec<String>,
    link_precedence: bool,
    pub closure: BTreeSet<String>,
    pub unknown_labels: Vec<String>,
}

impl ResolvedSchema {
    pub fn resolve(schema: &ConceptSchema, set: &SchemaSet, index: &ClassIndex) -> Self {
        let closure = build_class_closure(index, &set.pinned_classes, &schema.node_classes, schema.class_closure_depth);
        let pid = |label: &String| set.property_id(label).to_string();
        ResolvedSchema {
            concept: schema.concept,
            rule: schema.rule,
            edge_properties: schema.edge_properties.iter().map(pid).collect(),
            instance_property: pid(&schema.instance_property),
            required_claim: schema.required_claim.as_ref().map(pid),
            country_links: schema.country_link_properties.iter().map(pid).collect(),
            link_precedence: schema.country_link_precedence,
            closure: closure.classes,
            unknown_labels: closure.unknown_labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MatchedVia {
    Claim { property: String, class: String },
    SportClaim,
}

impl fmt::Display for MatchedVia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchedVia::Claim { property, class } => write!(f, "{property}:{class}"),
            MatchedVia::SportClaim => f.write_str("sport-claim"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ExtractionMatch {
    pub country: CountryCode,
    pub concept: ConceptId,
    pub label_en: String,
    pub qid: String,
    pub matched_via: MatchedVia,
}

pub fn entity_matches_schema(e: &WikidataEntity, s: &ResolvedSchema) -> Option<MatchedVia> {
    match s.rule {
        MatchRule::EdgeClass => s.edge_properties.iter().find_map(|p| {
            e.entity_claims(p)
                .find(|v| s.closure.contains(*v))
                .map(|v| MatchedVia::Claim {
                    property: p.clone(),
                    class: v.to_string(),
                })
        }),
        MatchRule::SportClaim => {
            let is_instance = e.entity_claims(&s.instance_property).any(|v| s.closure.contains(v));
            let has_claim = s.required_claim.as_deref().is_some_and(|p| e.has_claim(p));
            (is_instance && has_claim).then_some(MatchedVia::SportClaim)
        }
    }
}

/// Configured countries referenced by the schema's link properties, deduplicated.
pub fn resolve_country_links(
    e: &WikidataEntity,
    s: &ResolvedSchema,
    countries: &BTreeMap<String, CountryCode>,
) -> Vec<CountryCode> {
    let mut out: Vec<CountryCode> = Vec::new();
    for p in &s.country_links {
        for v in e.entity_claims(p) {
            if let Some(code) = countries.get(v) {
                if !out.contains(code) {
                    out.push(code.clone());
                }
            }
        }
        if s.link_precedence && !out.is_empty() {
            break;
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractionSummary {
    #[serde(flatten)]
    pub dump: DumpStats,
    pub class_edges: usize,
    pub matches: u64,
    pub artifacts: usize,
    pub merged_duplicates: u64,
    pub dropped_no_english_label: u64,
    pub dropped_no_country: u64,
    pub unknown_class_labels: BTreeMap<String, Vec<String>>,
    pub per_concept: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub artifacts: Vec<CulturalArtifact>,
    pub matches: Vec<ExtractionMatch>,
    pub summary: ExtractionSummary,
}

#[derive(Debug, Default)]
struct LineOutcome {
    matches: Vec<ExtractionMatch>,
    no_label: u64,
    no_country: u64,
}

/// Two-pass extractor: pass one indexes class labels and subclass edges,
/// pass two matches entities against the resolved schemas.
pub struct Extractor<'a> {
    schemas: &'a SchemaSet,
    profiles: &'a CountryProfiles,
    workers: usize,
    chunk_lines: usize,
}

impl<'a> Extractor<'a> {
    pub fn new(schemas: &'a SchemaSet, profiles: &'a CountryProfiles) -> Self {
        Extractor {
            schemas,
            profiles,
            workers: 1,
            chunk_lines: 4096,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn chunk_lines(mut self, lines: usize) -> Self {
        self.chunk_lines = lines.max(1);
        self
    }

    pub fn extract_path(&self, path: &Path) -> Result<Extraction, KbError> {
        self.extract_with(|| {
            File::open(path).map(BufReader::new).map_err(|e| KbError::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })
    }

    /// `open` is called once per pass and must yield the same bytes each time.
    pub fn extract_with<R, F>(&self, open: F) -> Result<Extraction, KbError>
    where
        R: BufRead,
        F: Fn() -> Result<R, KbError>,
    {
        self.schemas.require_all()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| KbError::Workers(e.to_string()))?;

        let wanted: Vec<&str> = self
            .schemas
            .schemas
            .iter()
            .flat_map(|s| s.node_classes.iter().map(String::as_str))
            .collect();
        let mut index = ClassIndex::new(wanted, self.schemas.subclass_property());
        let mut stats = DumpStats::default();
        self.for_each_chunk(open()?, |chunk, first_line| {
            let parsed: Vec<LineKind> = pool.install(|| chunk.par_iter().map(|l| parse_line(l)).collect());
            for (i, kind) in parsed.iter().enumerate() {
                stats.record(kind, first_line + i as u64);
                if let LineKind::Entity(e) = kind {
                    index.observe(e);
                }
            }
        })?;

        let resolved: Vec<ResolvedSchema> = self
            .schemas
            .schemas
            .iter()
            .map(|s| ResolvedSchema::resolve(s, self.schemas, &index))
            .collect();
        let countries = self.profiles.qid_index();

        let mut matches = Vec::new();
        let mut summary = ExtractionSummary {
            class_edges: index.edge_count(),
            ..Default::default()
        };
        drop(index);
        self.for_each_chunk(open()?, |chunk, _| {
            let outcomes: Vec<LineOutcome> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|line| match parse_line(line) {
                        LineKind::Entity(e) => match_entity(&e, &resolved, &countries),
                        _ => LineOutcome::default(),
                    })
                    .collect()
            });
            for o in outcomes {
                summary.dropped_no_english_label += o.no_label;
                summary.dropped_no_country += o.no_country;
                matches.extend(o.matches);
            }
        })?;
        matches.sort();

        let mut store = Store::new();
        for m in &matches {
            let language = self
                .profiles
                .get(&m.country)
                .map(|p| p.language.clone())
                .unwrap_or_else(|| "en".into());
            let mut artifact = CulturalArtifact::new(
                m.label_en.clone(),
                language,
                m.country.clone(),
                m.concept,
                Source::KnowledgeBase,
                Status::KbTrusted,
            )?;
            artifact.origin_meta.insert("qid".into(), m.qid.clone());
            artifact.origin_meta.insert("matched_via".into(), m.matched_via.to_string());
            if store.upsert(artifact)? != UpsertOutcome::Inserted {
                summary.merged_duplicates += 1;
            }
        }
        let artifacts: Vec<CulturalArtifact> = store.iter().cloned().collect();

        summary.dump = stats;
        summary.matches = matches.len() as u64;
        summary.artifacts = artifacts.len();
        for r in &resolved {
            if !r.unknown_labels.is_empty() {
                summary.unknown_class_labels.insert(r.concept.to_string(), r.unknown_labels.clone());
            }
        }
        for a in &artifacts {
            *summary.per_concept.entry(a.concept.to_string()).or_default() += 1;
        }
        Ok(Extraction {
            artifacts,
            matches,
            summary,
        })
    }

    fn for_each_chunk<R: BufRead>(
        &self,
        mut reader: R,
        mut f: impl FnMut(&[String], u64),
    ) -> Result<(), KbError> {
        let mut chunk = Vec::with_capacity(self.chunk_lines);
        let mut next_line = 1u64;
        while read_chunk(&mut reader, &mut chunk, self.chunk_lines, next_line)? > 0 {
            f(&chunk, next_line);
            next_line += chunk.len() as u64;
        }
        Ok(())
    }
}

fn match_entity(
    e: &WikidataEntity,
    schemas: &[ResolvedSchema],
    countries: &BTreeMap<String, CountryCode>,
) -> LineOutcome {
    let mut out = LineOutcome::default();
    for s in schemas {
        let Some(via) = entity_matches_schema(e, s) else { continue };
        let Some(label) = e.label("en").filter(|l| !normalize_text(l).is_empty()) else {
            out.no_label += 1;
            continue;
        };
        let links = resolve_country_links(e, s, countries);
        if links.is_empty() {
            out.no_country += 1;
            continue;
        }
        for country in links {
            out.matches.push(ExtractionMatch {
                country,
                concept: s.concept,
                label_en: label.to_string(),
                qid: e.qid.clone(),
                matched_via: via.clone(),
            });
        }
    }
    out
}

/// Convenience wrapper over [`Extractor`].
pub fn extract_artifacts(
    dump_path: &Path,
    schemas: &SchemaSet,
    profiles: &CountryProfiles,
    workers: usize,
) -> Result<Extraction, KbError> {
    Extractor::new(schemas, profiles).workers(workers).extract_path(dump_path)
}
