use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ValidationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Unsure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub task_id: String,
    pub annotator_id: String,
    pub answer: Answer,
    #[serde(default)]
    pub justification: Option<String>,
    pub submitted_at: DateTime<Utc>,
}

/// Field-level problem with a submitted verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{field}: {message}")]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl Verdict {
    pub fn check(&self) -> Result<(), FieldError> {
        if self.task_id.trim().is_empty() {
            return Err(FieldError { field: "task_id", message: "required".into() });
        }
        if self.annotator_id.trim().is_empty() {
            return Err(FieldError { field: "annotator_id", message: "required".into() });
        }
        let justified = self.justification.as_deref().is_some_and(|j| !j.trim().is_empty());
        if self.answer == Answer::Unsure && !justified {
            return Err(FieldError {
                field: "justification",
                message: "an unsure answer needs a brief justification".into(),
            });
        }
        Ok(())
    }
}

/// Append-only verdict file, one JSON object per line.
#[derive(Debug, Clone)]
pub struct VerdictLog {
    path: PathBuf,
}

impl VerdictLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        VerdictLog { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, v: &Verdict) -> Result<(), ValidationError> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| ValidationError::io(dir, e))?;
        }
        let mut line = serde_json::to_string(v).expect("verdict serializes");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| ValidationError::io(&self.path, e))?;
        f.write_all(line.as_bytes()).map_err(|e| ValidationError::io(&self.path, e))?;
        f.sync_data().map_err(|e| ValidationError::io(&self.path, e))
    }

    /// All verdicts in append order; a missing file is an empty log.
    pub fn read_all(&self) -> Result<Vec<Verdict>, ValidationError> {
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(ValidationError::io(&self.path, e)),
        };
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v = serde_json::from_str(line).map_err(|e| ValidationError::Log {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(answer: Answer, justification: Option<&str>) -> Verdict {
        Verdict {
            task_id: "t-1".into(),
            annotator_id: "ann".into(),
            answer,
            justification: justification.map(str::to_string),
            submitted_at: DateTime::from_timestamp(0, 0).unwrap(),
        }
    }

    #[test]
    fn unsure_needs_justification() {
        assert!(verdict(Answer::Yes, None).check().is_ok());
        assert_eq!(verdict(Answer::Unsure, Some("  ")).check().unwrap_err().field, "justification");
        assert!(verdict(Answer::Unsure, Some("regional only")).check().is_ok());
    }

    #[test]
    fn log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let log = VerdictLog::new(dir.path().join("v/verdicts.jsonl"));
        assert!(log.read_all().unwrap().is_empty());
        log.append(&verdict(Answer::Yes, None)).unwrap();
        log.append(&verdict(Answer::No, None)).unwrap();
        let all = log.read_all().unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].answer, Answer::No);
    }
}
