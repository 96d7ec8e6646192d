//! Iterative exclusion-list candidate generation against a text model.

mod parse;
mod prompt;
mod run;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use parse::{parse_item_list, ParsedItems};
pub use prompt::{render_exclusion, render_prompt, PROMPT_TEMPLATE};
pub use run::{cycle_path, pair_dir, run_generation, GenerationConfig, GenerationCycle, GenerationPair, GenerationRun};

use crate::net::{EndpointError, TextModel};
use crate::repository::{InvariantViolation, StoreError};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("generation config: {0}")]
    Config(String),
    #[error("aborted at cycle {cycle}: {source}")]
    Aborted {
        cycle: u32,
        completed: Box<GenerationRun>,
        #[source]
        source: EndpointError,
    },
    #[error(transparent)]
    Artifact(#[from] InvariantViolation),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl GenerationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        GenerationError::Io { path: path.to_path_buf(), source }
    }
}

/// Runs several pairs concurrently; each pair's cycles stay sequential.
/// Results come back in input order.
pub fn generate_pairs(
    jobs: &[(GenerationPair, Vec<String>)],
    model: &dyn TextModel,
    config: &GenerationConfig,
    runs_dir: &Path,
    workers: usize,
) -> Result<Vec<Result<GenerationRun, GenerationError>>, GenerationError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GenerationError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(pair, kb)| run_generation(pair, kb, model, config, runs_dir))
            .collect()
    }))
}
