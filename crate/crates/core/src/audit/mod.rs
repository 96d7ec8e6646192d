//! Representation audit: prompt battery, answer collection, matching and scoring.

mod answers;
mod battery;
mod metric;
mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use answers::{check_model_tag, collect_answers, AnswerArchive, CollectReport, ModelAnswer};
pub use battery::{PromptBattery, PROMPTS_PER_CONCEPT};
pub use metric::{
    concept_fraction, country_average, exact_average, match_artifacts_in_answer, round2, round2_exact, ConceptScore,
    Fraction, NameMatcher,
};
pub use report::{
    average_table, choropleth_table, compute_report, cross_model_average, emit_report, fraction_table,
    RepresentationReport,
};

use crate::net::EndpointError;
use crate::repository::{ConceptId, StoreError};

pub const DEFAULT_SAMPLES_PER_PROMPT: u32 = 5;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("prompt battery: {0}")]
    Battery(String),
    #[error("audit config: {0}")]
    Config(String),
    #[error("model tag {0:?} must be non-empty ASCII letters, digits, '.', '-' or '_'")]
    ModelTag(String),
    #[error("missing answer file {0}")]
    MissingAnswer(PathBuf),
    #[error("no fraction for concept {0}")]
    MissingConcept(ConceptId),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("collection stopped with {collected} of {total} answers archived: {source}")]
    Aborted {
        collected: usize,
        total: usize,
        #[source]
        source: Box<AuditError>,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl AuditError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AuditError::Io { path: path.to_path_buf(), source }
    }
}
