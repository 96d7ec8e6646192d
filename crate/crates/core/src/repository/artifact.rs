use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::normalize::{normalize_name, DegenerateName};

/// The seven cultural concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptId {
    ClothingAccessories,
    Cuisine,
    HistoricalEvents,
    HolidaysFestivals,
    Landmarks,
    Sportspeople,
    SportsTeams,
}

impl ConceptId {
    pub const ALL: [ConceptId; 7] = [
        ConceptId::ClothingAccessories,
        ConceptId::Cuisine,
        ConceptId::HistoricalEvents,
        ConceptId::HolidaysFestivals,
        ConceptId::Landmarks,
        ConceptId::Sportspeople,
        ConceptId::SportsTeams,
    ];

    /// Column order of the representation tables.
    pub const REPORT_ORDER: [ConceptId; 7] = [
        ConceptId::Cuisine,
        ConceptId::HolidaysFestivals,
        ConceptId::ClothingAccessories,
        ConceptId::Landmarks,
        ConceptId::HistoricalEvents,
        ConceptId::Sportspeople,
        ConceptId::SportsTeams,
    ];

    /// Concepts collected through community sourcing.
    pub const COMMUNITY: [ConceptId; 3] = [
        ConceptId::Cuisine,
        ConceptId::ClothingAccessories,
        ConceptId::HolidaysFestivals,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptId::ClothingAccessories => "clothing_accessories",
            ConceptId::Cuisine => "cuisine",
            ConceptId::HistoricalEvents => "historical_events",
            ConceptId::HolidaysFestivals => "holidays_festivals",
            ConceptId::Landmarks => "landmarks",
            ConceptId::Sportspeople => "sportspeople",
            ConceptId::SportsTeams => "sports_teams",
        }
    }

    /// Lowercase phrase used inside prompts and annotation questions.
    pub fn label(self) -> &'static str {
        match self {
            ConceptId::ClothingAccessories => "clothing and accessories",
            ConceptId::Cuisine => "cuisine",
            ConceptId::HistoricalEvents => "historical events",
            ConceptId::HolidaysFestivals => "holidays and festivals",
            ConceptId::Landmarks => "landmarks",
            ConceptId::Sportspeople => "sportspeople",
            ConceptId::SportsTeams => "sports teams",
        }
    }

    /// Table column heading.
    pub fn heading(self) -> &'static str {
        match self {
            ConceptId::ClothingAccessories => "Clothing & Accessories",
            ConceptId::Cuisine => "Cuisine",
            ConceptId::HistoricalEvents => "Historical Events",
            ConceptId::HolidaysFestivals => "Holidays & Festivals",
            ConceptId::Landmarks => "Landmarks",
            ConceptId::Sportspeople => "Sportspeople",
            ConceptId::SportsTeams => "Sports Teams",
        }
    }

    pub fn is_community(self) -> bool {
        Self::COMMUNITY.contains(&self)
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown concept {0:?}")]
pub struct UnknownConcept(pub String);

impl FromStr for ConceptId {
    type Err = UnknownConcept;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownConcept(s.to_string()))
    }
}

/// ISO 3166-1 alpha-2 country code, stored uppercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid country code {0:?}, expected two ASCII letters")]
pub struct InvalidCountryCode(pub String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, InvalidCountryCode> {
        let code = code.trim();
        if code.len() == 2 && code.bytes().all(|b| b.is_ascii_alphabetic()) {
            Ok(CountryCode(code.to_ascii_uppercase()))
        } else {
            Err(InvalidCountryCode(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = InvalidCountryCode;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        CountryCode::new(&value)
    }
}

impl From<CountryCode> for String {
    fn from(value: CountryCode) -> Self {
        value.0
    }
}

impl FromStr for CountryCode {
    type Err = InvalidCountryCode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CountryCode::new(s)
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Collection prong an artifact came from. Declaration order is merge precedence, low to high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    LlmGenerated,
    Community,
    KnowledgeBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    KbTrusted,
    HeuristicAccepted,
    PendingValidation,
    Accepted,
    Rejected,
}

impl Status {
    /// Statuses whose artifacts count as part of the repository for auditing.
    pub fn is_usable(self) -> bool {
        matches!(self, Status::KbTrusted | Status::HeuristicAccepted | Status::Accepted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizationMode {
    Translated,
    LocalizedAsIs,
}

/// origin_meta key that permits a status outside the source's usual set.
pub const MANUAL_OVERRIDE_KEY: &str = "manual_override";

/// One culturally salient artifact. Field order is the on-disk field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CulturalArtifact {
    pub id: String,
    pub name_en: String,
    pub name_local: Option<String>,
    pub language: String,
    pub country: CountryCode,
    pub concept: ConceptId,
    pub source: Source,
    pub status: Status,
    pub popularity: Option<u64>,
    pub localization_mode: Option<LocalizationMode>,
    pub origin_meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("status {status:?} is not permitted for source {prong:?}")]
    StatusForSource { prong: Source, status: Status },
    #[error("popularity is only recorded for llm_generated artifacts")]
    PopularityOnNonLlm,
    #[error("artifact has neither an English nor a local name")]
    Unnamed,
    #[error(transparent)]
    Degenerate(#[from] DegenerateName),
    #[error("empty artifact id")]
    EmptyId,
}

impl CulturalArtifact {
    /// Builds an artifact with a derived id and empty optional fields.
    pub fn new(
        name_en: impl Into<String>,
        language: impl Into<String>,
        country: CountryCode,
        concept: ConceptId,
        source: Source,
        status: Status,
    ) -> Result<Self, InvariantViolation> {
        let mut artifact = CulturalArtifact {
            id: String::new(),
            name_en: name_en.into(),
            name_local: None,
            language: language.into(),
            country,
            concept,
            source,
            status,
            popularity: None,
            localization_mode: None,
            origin_meta: BTreeMap::new(),
        };
        artifact.id = artifact.derived_id()?;
        Ok(artifact)
    }

    /// Normalized name used for identity within a (country, concept) partition.
    /// Falls back to the local name while no English name is known.
    pub fn match_key(&self) -> Result<String, InvariantViolation> {
        if !self.name_en.trim().is_empty() {
            return Ok(normalize_name(&self.name_en)?);
        }
        match &self.name_local {
            Some(local) if !local.trim().is_empty() => Ok(normalize_name(local)?),
            _ => Err(InvariantViolation::Unnamed),
        }
    }

    /// Stable id hashed from (country, concept, normalized name).
    pub fn derived_id(&self) -> Result<String, InvariantViolation> {
        let key = self.match_key()?;
        Ok(derive_id(&self.country, self.concept, &key))
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.id.is_empty() {
            return Err(InvariantViolation::EmptyId);
        }
        self.match_key()?;
        let overridden = self.origin_meta.contains_key(MANUAL_OVERRIDE_KEY);
        let allowed = match self.source {
            Source::KnowledgeBase => self.status == Status::KbTrusted,
            // human-authored records enter accepted; rejection is an explicit curation step
            Source::Community => matches!(self.status, Status::Accepted | Status::Rejected),
            Source::LlmGenerated => self.status != Status::KbTrusted,
        };
        if !allowed && !(overridden && self.status != Status::KbTrusted) {
            return Err(InvariantViolation::StatusForSource {
                prong: self.source,
                status: self.status,
            });
        }
        if self.popularity.is_some() && self.source != Source::LlmGenerated {
            return Err(InvariantViolation::PopularityOnNonLlm);
        }
        Ok(())
    }

    /// Names usable for surface matching (English and local).
    pub fn surface_names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name_en.as_str())
            .chain(self.name_local.as_deref())
            .filter(|n| !n.trim().is_empty())
    }
}

pub fn derive_id(country: &CountryCode, concept: ConceptId, normalized: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(country.as_str().as_bytes());
    hasher.update([0x1f]);
    hasher.update(concept.as_str().as_bytes());
    hasher.update([0x1f]);
    hasher.update(normalized.as_bytes());
    let digest = hasher.finalize();
    format!("a{}", hex::encode(&digest[..8]))
}
