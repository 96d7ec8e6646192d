//! Knowledge-base extraction from Wikidata entity dumps.

mod closure;
mod dump;
mod extract;
mod schema;

use std::path::PathBuf;

use thiserror::Error;

pub use closure::{build_class_closure, ClassIndex, Closure};
pub use dump::{is_item_id, parse_dump_stream, parse_line, ClaimValue, DumpStats, DumpStream, LineKind, WikidataEntity};
pub use extract::{
    entity_matches_schema, extract_artifacts, resolve_country_links, Extraction, ExtractionMatch,
    ExtractionSummary, Extractor, MatchedVia, ResolvedSchema,
};
pub use schema::{ConceptSchema, MatchRule, SchemaSet};

use crate::repository::{InvariantViolation, StoreError};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dump read failed at line {line}: {source}")]
    DumpRead {
        line: u64,
        #[source]
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Artifact(#[from] InvariantViolation),
    #[error(transparent)]
    Store(#[from] StoreError),
}
