//! Artifact data model, normalization, country profiles and the line-delimited store.

mod artifact;
pub mod normalize;
mod profiles;
mod store;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use artifact::{
    derive_id, ConceptId, CountryCode, CulturalArtifact, InvalidCountryCode, InvariantViolation,
    LocalizationMode, Source, Status, UnknownConcept, MANUAL_OVERRIDE_KEY,
};
pub use normalize::{normalize_name, normalize_text, DegenerateName};
pub use profiles::{CountryProfile, CountryProfiles, Prong};
pub use store::{write_atomic, RecordKey, Store, UpsertOutcome};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: read failed: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("artifact {id}: {violation}")]
    Invariant { id: String, violation: InvariantViolation },
    #[error("artifact id {id} already used by record {existing:?}")]
    DuplicateId { id: String, existing: String },
    #[error("unknown artifact id {0}")]
    UnknownId(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}
