use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::task::AnnotationTask;
use super::verdict::{Answer, Verdict};
use super::ValidationError;
use crate::repository::{Status, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub artifact_id: String,
    pub decision: Decision,
}

/// Accepted iff at least one annotator said yes. Unsure is not a yes.
pub fn decide(answers: &[Answer]) -> Decision {
    if answers.contains(&Answer::Yes) {
        Decision::Accepted
    } else {
        Decision::Rejected
    }
}

/// Folds the verdicts for one task, counting one answer per annotator.
pub fn aggregate_verdicts(task: &AnnotationTask, verdicts: &[Verdict]) -> Result<Outcome, ValidationError> {
    let mut seen = BTreeSet::new();
    let answers: Vec<Answer> = verdicts
        .iter()
        .filter(|v| v.task_id == task.task_id)
        .filter(|v| seen.insert(v.annotator_id.as_str()))
        .map(|v| v.answer)
        .collect();
    if (answers.len() as u32) < task.required_verdicts {
        return Err(ValidationError::Incomplete {
            task_id: task.task_id.clone(),
            have: answers.len() as u32,
            need: task.required_verdicts,
        });
    }
    Ok(Outcome {
        artifact_id: task.artifact_id.clone(),
        decision: decide(&answers),
    })
}

/// Applies all outcomes or none: an unknown artifact id leaves `store` untouched.
pub fn apply_outcomes(store: &mut Store, outcomes: &[Outcome]) -> Result<usize, ValidationError> {
    if let Some(missing) = outcomes.iter().find(|o| !store.contains_id(&o.artifact_id)) {
        return Err(ValidationError::UnknownArtifact(missing.artifact_id.clone()));
    }
    let mut next = store.clone();
    for o in outcomes {
        let status = match o.decision {
            Decision::Accepted => Status::Accepted,
            Decision::Rejected => Status::Rejected,
        };
        next.set_status(&o.artifact_id, status)?;
    }
    *store = next;
    Ok(outcomes.len())
}
