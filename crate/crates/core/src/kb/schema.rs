use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KbError;
use crate::repository::ConceptId;

const DEFAULT_SCHEMAS: &str = include_str!("../../data/schemas.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    /// Some claim on an edge property points into the class closure.
    #[default]
    EdgeClass,
    /// Instance of a closure class and carries the required claim.
    SportClaim,
}

/// Traversal recipe for one concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptSchema {
    pub concept: ConceptId,
    #[serde(default)]
    pub rule: MatchRule,
    pub edge_properties: Vec<String>,
    pub node_classes: Vec<String>,
    pub country_link_properties: Vec<String>,
    /// Use the first link property that resolves instead of the union of all.
    #[serde(default)]
    pub country_link_precedence: bool,
    #[serde(default)]
    pub required_claim: Option<String>,
    #[serde(default = "default_instance_property")]
    pub instance_property: String,
    #[serde(default = "default_depth")]
    pub class_closure_depth: u32,
}

fn default_instance_property() -> String {
    "instance of".into()
}

fn default_depth() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SchemaFile {
    properties: BTreeMap<String, String>,
    #[serde(default)]
    classes: BTreeMap<String, Vec<String>>,
    concept: Vec<ConceptSchema>,
}

/// All concept schemas plus the label mappings they rely on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaSet {
    pub properties: BTreeMap<String, String>,
    pub pinned_classes: BTreeMap<String, Vec<String>>,
    pub schemas: Vec<ConceptSchema>,
}

impl SchemaSet {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SCHEMAS).expect("bundled schemas are valid")
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = fs::read_to_string(path).map_err(|e| KbError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let file: SchemaFile = toml::from_str(text).map_err(|e| KbError::Schema(e.to_string()))?;
        let set = SchemaSet {
            properties: file.properties,
            pinned_classes: file.classes,
            schemas: file.concept,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), KbError> {
        let mut seen = BTreeSet::new();
        for s in &self.schemas {
            if !seen.insert(s.concept) {
                return Err(KbError::Schema(format!("concept {} listed twice", s.concept)));
            }
            if s.rule == MatchRule::EdgeClass && (s.edge_properties.is_empty() || s.node_classes.is_empty()) {
                return Err(KbError::Schema(format!(
                    "concept {} needs edge_properties and node_classes",
                    s.concept
                )));
            }
            if s.rule == MatchRule::SportClaim && s.required_claim.is_none() {
                return Err(KbError::Schema(format!("concept {} needs required_claim", s.concept)));
            }
            let mut props: Vec<&String> = s.edge_properties.iter().chain(&s.country_link_properties).collect();
            props.push(&s.instance_property);
            props.extend(s.required_claim.as_ref());
            for p in props {
                if !self.properties.contains_key(p) {
                    return Err(KbError::Schema(format!(
                        "concept {}: property {p:?} has no id in [properties]",
                        s.concept
                    )));
                }
            }
        }
        if !self.properties.contains_key("subclass of") {
            return Err(KbError::Schema("[properties] must map \"subclass of\"".into()));
        }
        Ok(())
    }

    /// Fails unless every concept has a schema.
    pub fn require_all(&self) -> Result<(), KbError> {
        let have: BTreeSet<ConceptId> = self.schemas.iter().map(|s| s.concept).collect();
        match ConceptId::ALL.into_iter().find(|c| !have.contains(c)) {
            Some(missing) => Err(KbError::Schema(format!("no schema for concept {missing}"))),
            None => Ok(()),
        }
    }

    pub fn property_id(&self, label: &str) -> &str {
        &self.properties[label]
    }

    pub fn subclass_property(&self) -> &str {
        self.property_id("subclass of")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_all_concepts() {
        let set = SchemaSet::builtin();
        set.require_all().unwrap();
        let clothing = set.schemas.iter().find(|s| s.concept == ConceptId::ClothingAccessories).unwrap();
        assert_eq!(clothing.node_classes, ["clothing", "costume", "traditional costume", "costume accessory", "bijou"]);
        assert_eq!(clothing.edge_properties, ["instance of", "part of"]);
        let landmarks = set.schemas.iter().find(|s| s.concept == ConceptId::Landmarks).unwrap();
        assert_eq!(landmarks.node_classes.len(), 39);
        let sports = set.schemas.iter().find(|s| s.concept == ConceptId::Sportspeople).unwrap();
        assert_eq!(sports.rule, MatchRule::SportClaim);
        assert_eq!(sports.country_link_properties, ["country for sport", "country"]);
    }

    #[test]
    fn rejects_unmapped_property() {
        let text = r#"
            [properties]
            "subclass of" = "P279"
            [[concept]]
            concept = "cuisine"
            edge_properties = ["instance of"]
            node_classes = ["food"]
            country_link_properties = []
        "#;
        assert!(matches!(SchemaSet::parse(text), Err(KbError::Schema(m)) if m.contains("instance of")));
    }

    #[test]
    fn missing_concepts_reported() {
        let text = r#"
            [properties]
            "subclass of" = "P279"
            "instance of" = "P31"
            [[concept]]
            concept = "cuisine"
            edge_properties = ["instance of"]
            node_classes = ["food"]
            country_link_properties = []
        "#;
        let set = SchemaSet::parse(text).unwrap();
        assert!(set.require_all().is_err());
        assert_eq!(set.schemas[0].class_closure_depth, 1);
    }
}
