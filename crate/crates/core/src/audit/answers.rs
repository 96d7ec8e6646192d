use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::battery::PromptBattery;
use super::AuditError;
use crate::net::TextModel;
use crate::repository::{write_atomic, ConceptId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelAnswer {
    pub model_tag: String,
    pub concept: ConceptId,
    pub prompt_index: u32,
    pub sample_index: u32,
    pub text: String,
}

/// Directory of verbatim answers: `<root>/<model>/<concept>/p<i>-s<j>.txt`.
#[derive(Debug, Clone)]
pub struct AnswerArchive {
    root: PathBuf,
}

pub fn check_model_tag(tag: &str) -> Result<(), AuditError> {
    let ok = !tag.is_empty()
        && !tag.starts_with('.')
        && tag.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'));
    if ok {
        Ok(())
    } else {
        Err(AuditError::ModelTag(tag.to_string()))
    }
}

impl AnswerArchive {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AnswerArchive { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, model_tag: &str, concept: ConceptId, prompt: u32, sample: u32) -> PathBuf {
        self.root
            .join(model_tag)
            .join(concept.as_str())
            .join(format!("p{prompt}-s{sample}.txt"))
    }

    pub fn read(&self, model_tag: &str, concept: ConceptId, prompt: u32, sample: u32) -> Result<Option<ModelAnswer>, AuditError> {
        let path = self.path(model_tag, concept, prompt, sample);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(Some(ModelAnswer {
                model_tag: model_tag.to_string(),
                concept,
                prompt_index: prompt,
                sample_index: sample,
                text,
            })),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(AuditError::io(&path, e)),
        }
    }

    pub fn write(&self, a: &ModelAnswer) -> Result<(), AuditError> {
        let path = self.path(&a.model_tag, a.concept, a.prompt_index, a.sample_index);
        let dir = path.parent().expect("answer path has a parent");
        fs::create_dir_all(dir).map_err(|e| AuditError::io(dir, e))?;
        Ok(write_atomic(&path, a.text.as_bytes())?)
    }

    /// Every answer for a full battery run; a missing cell is an error.
    pub fn load_all(&self, battery: &PromptBattery, model_tag: &str, samples_per_prompt: u32) -> Result<Vec<ModelAnswer>, AuditError> {
        check_model_tag(model_tag)?;
        let mut out = Vec::with_capacity(battery.len() * samples_per_prompt as usize);
        for (concept, p, _) in battery.iter() {
            for s in 1..=samples_per_prompt {
                match self.read(model_tag, concept, p, s)? {
                    Some(a) => out.push(a),
                    None => return Err(AuditError::MissingAnswer(self.path(model_tag, concept, p, s))),
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CollectReport {
    pub total: usize,
    pub already_present: usize,
    pub requested: usize,
}

/// Issues every battery prompt `samples_per_prompt` times and archives the
/// replies. Cells already on disk are skipped, so a rerun resumes.
pub fn collect_answers(
    battery: &PromptBattery,
    model: &dyn TextModel,
    model_tag: &str,
    samples_per_prompt: u32,
    archive: &AnswerArchive,
    workers: usize,
) -> Result<CollectReport, AuditError> {
    check_model_tag(model_tag)?;
    if samples_per_prompt == 0 {
        return Err(AuditError::Config("samples_per_prompt must be positive".into()));
    }
    let cells: Vec<(ConceptId, u32, &str, u32)> = battery
        .iter()
        .flat_map(|(c, p, text)| (1..=samples_per_prompt).map(move |s| (c, p, text, s)))
        .collect();
    let mut todo = Vec::new();
    for cell in &cells {
        if !archive.path(model_tag, cell.0, cell.1, cell.3).exists() {
            todo.push(*cell);
        }
    }
    let report = CollectReport {
        total: cells.len(),
        already_present: cells.len() - todo.len(),
        requested: todo.len(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AuditError::Config(format!("worker pool: {e}")))?;
    let stop = AtomicBool::new(false);
    let results: Vec<Result<bool, AuditError>> = pool.install(|| {
        todo.par_iter()
            .map(|&(concept, p, prompt, s)| {
                if stop.load(Ordering::SeqCst) {
                    return Ok(false);
                }
                match model.complete(prompt) {
                    Ok(text) => {
                        archive.write(&ModelAnswer {
                            model_tag: model_tag.to_string(),
                            concept,
                            prompt_index: p,
                            sample_index: s,
                            text,
                        })?;
                        Ok(true)
                    }
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        Err(AuditError::Endpoint(e))
                    }
                }
            })
            .collect()
    });
    let done = results.iter().filter(|r| matches!(r, Ok(true))).count();
    if let Some(err) = results.into_iter().find_map(Result::err) {
        return Err(AuditError::Aborted {
            collected: report.already_present + done,
            total: report.total,
            source: Box::new(err),
        });
    }
    Ok(report)
}
