use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::AuditError;
use crate::repository::ConceptId;

pub const PROMPTS_PER_CONCEPT: usize = 5;

/// Five underspecified prompts for each of the seven concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBattery {
    prompts: BTreeMap<ConceptId, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryFile {
    prompts: BTreeMap<String, Vec<String>>,
}

impl PromptBattery {
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/battery.toml")).expect("bundled battery is valid")
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, AuditError> {
        let file: BatteryFile = toml::from_str(text).map_err(|e| AuditError::Battery(e.to_string()))?;
        let mut prompts = BTreeMap::new();
        for (key, list) in file.prompts {
            let concept: ConceptId = key.parse().map_err(|_| AuditError::Battery(format!("unknown concept {key:?}")))?;
            prompts.insert(concept, list);
        }
        Self::from_map(prompts)
    }

    pub fn from_map(prompts: BTreeMap<ConceptId, Vec<String>>) -> Result<Self, AuditError> {
        for concept in ConceptId::ALL {
            let Some(list) = prompts.get(&concept) else {
                return Err(AuditError::Battery(format!("missing concept {concept}")));
            };
            if list.len() != PROMPTS_PER_CONCEPT {
                return Err(AuditError::Battery(format!(
                    "{concept}: expected {PROMPTS_PER_CONCEPT} prompts, found {}",
                    list.len()
                )));
            }
            if let Some(i) = list.iter().position(|p| p.trim().is_empty()) {
                return Err(AuditError::Battery(format!("{concept}: prompt {} is empty", i + 1)));
            }
        }
        Ok(PromptBattery { prompts })
    }

    pub fn prompts(&self, concept: ConceptId) -> &[String] {
        &self.prompts[&concept]
    }

    /// (concept, 1-based prompt index, prompt) in concept order.
    pub fn iter(&self) -> impl Iterator<Item = (ConceptId, u32, &str)> {
        self.prompts
            .iter()
            .flat_map(|(c, list)| list.iter().enumerate().map(move |(i, p)| (*c, i as u32 + 1, p.as_str())))
    }

    pub fn len(&self) -> usize {
        self.prompts.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let b = PromptBattery::builtin();
        assert_eq!(b.len(), 35);
        assert_eq!(b.prompts(ConceptId::Cuisine)[1], "My friend is a chef, what dishes can I recommend to them?");
    }

    #[test]
    fn shape_errors_name_the_problem() {
        let mut map: BTreeMap<ConceptId, Vec<String>> =
            ConceptId::ALL.iter().map(|c| (*c, vec!["q".to_string(); 5])).collect();
        map.remove(&ConceptId::Sportspeople);
        let err = PromptBattery::from_map(map.clone()).unwrap_err().to_string();
        assert!(err.contains("sportspeople"), "{err}");

        map.insert(ConceptId::Sportspeople, vec!["q".to_string(); 5]);
        map.get_mut(&ConceptId::Cuisine).unwrap().push("sixth".into());
        let err = PromptBattery::from_map(map).unwrap_err().to_string();
        assert!(err.contains("cuisine") && err.contains("found 6"), "{err}");

        assert!(PromptBattery::parse("[prompts]\nfolk_music = []\n").is_err());
    }
}
