use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifact::CountryCode;
use super::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prong {
    KnowledgeGraph,
    Llm,
    Community,
}

/// Per-country collection and localization settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country: CountryCode,
    /// English display name, used in prompts and search queries.
    pub name: String,
    pub language: String,
    pub prongs: BTreeSet<Prong>,
    pub localized: bool,
    pub translated: bool,
    /// Wikidata item for the country, used to resolve country claims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qid: Option<String>,
}

const DEFAULT_PROFILES: &str = include_str!("../../data/countries.jsonl");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryProfiles {
    by_code: BTreeMap<CountryCode, CountryProfile>,
}

impl CountryProfiles {
    /// The 29 countries shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_PROFILES).expect("bundled country profiles are valid")
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut by_code = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let profile: CountryProfile = serde_json::from_str(line).map_err(|e| StoreError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
            if by_code.insert(profile.country.clone(), profile).is_some() {
                return Err(StoreError::Malformed {
                    line: idx + 1,
                    message: "duplicate country profile".into(),
                });
            }
        }
        Ok(CountryProfiles { by_code })
    }

    pub fn from_profiles(profiles: impl IntoIterator<Item = CountryProfile>) -> Self {
        CountryProfiles {
            by_code: profiles.into_iter().map(|p| (p.country.clone(), p)).collect(),
        }
    }

    pub fn get(&self, code: &CountryCode) -> Option<&CountryProfile> {
        self.by_code.get(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryProfile> {
        self.by_code.values()
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    pub fn with_prong(&self, prong: Prong) -> impl Iterator<Item = &CountryProfile> {
        self.by_code.values().filter(move |p| p.prongs.contains(&prong))
    }

    /// Wikidata item id to country code.
    pub fn qid_index(&self) -> BTreeMap<String, CountryCode> {
        self.by_code
            .values()
            .filter_map(|p| p.qid.clone().map(|q| (q, p.country.clone())))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in self.by_code.values() {
            out.push_str(&serde_json::to_string(p).expect("profile serializes"));
            out.push('\n');
        }
        out
    }
}
