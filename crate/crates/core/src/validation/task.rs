use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::repository::{ConceptId, CountryCode, CulturalArtifact, Status};

pub const DEFAULT_REQUIRED_VERDICTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Open,
    Leased,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub artifact_id: String,
    pub country: CountryCode,
    pub concept: ConceptId,
    pub category: String,
    pub item: String,
    pub question: String,
    pub required_verdicts: u32,
    pub state: TaskState,
}

pub fn render_question(item: &str, category: &str) -> String {
    format!("In the culture of your country, is {item} a part of {category}?")
}

pub fn task_id_for(artifact_id: &str) -> String {
    format!("t-{artifact_id}")
}

/// One task per pending artifact, in input order with duplicates dropped.
/// The item shown is the local name when known, else the English name.
pub fn build_tasks(selected: &[&CulturalArtifact], required_verdicts: u32) -> Vec<AnnotationTask> {
    let required = required_verdicts.max(1);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in selected {
        if a.status != Status::PendingValidation {
            log::warn!("artifact {} has status {:?}; no task built", a.id, a.status);
            continue;
        }
        if !seen.insert(a.id.as_str()) {
            continue;
        }
        let item = a
            .name_local
            .as_deref()
            .filter(|s| !s.trim().is_empty())
            .unwrap_or(&a.name_en)
            .to_string();
        let category = a.concept.label().to_string();
        out.push(AnnotationTask {
            task_id: task_id_for(&a.id),
            artifact_id: a.id.clone(),
            country: a.country.clone(),
            concept: a.concept,
            question: render_question(&item, &category),
            category,
            item,
            required_verdicts: required,
            state: TaskState::Open,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::Source;

    fn pending(name: &str, country: &str, concept: ConceptId) -> CulturalArtifact {
        CulturalArtifact::new(
            name,
            "it",
            CountryCode::new(country).unwrap(),
            concept,
            Source::LlmGenerated,
            Status::PendingValidation,
        )
        .unwrap()
    }

    #[test]
    fn question_template() {
        let pizza = pending("pizza", "IT", ConceptId::Cuisine);
        let tasks = build_tasks(&[&pizza], 3);
        assert_eq!(tasks[0].question, "In the culture of your country, is pizza a part of cuisine?");
        assert_eq!(tasks[0].task_id, format!("t-{}", pizza.id));
        assert!(build_tasks(&[], 3).is_empty());
    }

    #[test]
    fn dedup_skip_and_local_name() {
        let mut a = pending("kimono", "JP", ConceptId::ClothingAccessories);
        a.name_local = Some("着物".into());
        let mut done = pending("obi", "JP", ConceptId::ClothingAccessories);
        done.status = Status::Accepted;
        let tasks = build_tasks(&[&a, &a, &done], 0);
        assert_eq!(tasks.len(), 1);
        assert_eq!(tasks[0].item, "着物");
        assert_eq!(tasks[0].required_verdicts, 1);
    }
}
