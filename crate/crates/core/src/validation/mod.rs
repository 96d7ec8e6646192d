//! Human validation of triaged candidates: tasks, leases, verdicts and outcomes.

mod board;
mod outcome;
mod service;
mod task;
mod verdict;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use board::{AnnotatorRegistry, BoardError, PartitionProgress, Receipt, TaskBoard};
pub use outcome::{aggregate_verdicts, apply_outcomes, decide, Decision, Outcome};
pub use service::{Clock, TaskView, ValidationService, VerdictSubmission};
pub use task::{build_tasks, render_question, task_id_for, AnnotationTask, TaskState, DEFAULT_REQUIRED_VERDICTS};
pub use verdict::{Answer, FieldError, Verdict, VerdictLog};

use crate::repository::StoreError;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verdict log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("annotator registry: {0}")]
    Registry(String),
    #[error("task {task_id} has {have} of {need} verdicts")]
    Incomplete { task_id: String, have: u32, need: u32 },
    #[error("outcome references unknown artifact {0}")]
    UnknownArtifact(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ValidationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ValidationError::Io { path: path.to_path_buf(), source }
    }
}

/// Outcomes for every task that has reached its quorum.
pub fn collect_outcomes(board: &TaskBoard) -> Result<Vec<Outcome>, ValidationError> {
    board.completed().map(|(t, v)| aggregate_verdicts(t, v)).collect()
}
