use std::path::PathBuf;

use cultura_core::audit::AuditError;
use cultura_core::generation::GenerationError;
use cultura_core::kb::KbError;
use cultura_core::localization::LocalizationError;
use cultura_core::triage::TriageError;
use cultura_core::validation::ValidationError;
use cultura_core::StoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("{path}: {message}")]
    MissingInput { path: PathBuf, message: String },
    #[error("stage order: {0}")]
    StageOrder(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Triage(#[from] TriageError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("endpoint: {0}")]
    Endpoint(String),
    #[error("server: {0}")]
    Server(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingKey(_) => "missing_config_key",
            CliError::MissingInput { .. } => "missing_input",
            CliError::StageOrder(_) => "stage_order",
            CliError::Io { .. } => "io",
            CliError::Store(_) => "store",
            CliError::Kb(_) => "extract",
            CliError::Generation(GenerationError::Aborted { .. }) => "generation_aborted",
            CliError::Generation(_) => "generation",
            CliError::Triage(TriageError::Paused { .. }) => "triage_paused",
            CliError::Triage(_) => "triage",
            CliError::Validation(_) => "validation",
            CliError::Localization(_) => "localization",
            CliError::Audit(AuditError::Aborted { .. }) => "audit_aborted",
            CliError::Audit(_) => "audit",
            CliError::Endpoint(_) => "endpoint",
            CliError::Server(_) => "server",
        }
    }

    pub fn resumable(&self) -> bool {
        matches!(
            self,
            CliError::Generation(GenerationError::Aborted { .. })
                | CliError::Triage(TriageError::Paused { .. })
                | CliError::Audit(AuditError::Aborted { .. })
        )
    }
}
