//! Community ingestion and the export/import cycle for human translation.

mod community;
mod translation;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use community::{import_community_records, ingest_community, CommunityImport, CommunityRecord, NoveltyReport};
pub use translation::{
    check_job, export_translation_jobs, import_translations, parse_jobs, read_jobs, write_jobs, Direction, ParsedJobs,
    TranslationImport, TranslationJob,
};

use crate::repository::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no valid rows ({} rejected)", errors.len())]
    NoValidRows { errors: Vec<RowError> },
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl LocalizationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        LocalizationError::Io { path: path.to_path_buf(), source }
    }
}
