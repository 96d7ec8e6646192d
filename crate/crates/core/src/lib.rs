//! Cultural artifact repository pipeline.
//!
//! Builds a multilingual repository of culturally salient artifacts from three
//! prongs (knowledge-base extraction, LLM generation with targeted human
//! validation, community contributions) and audits how often generative
//! models mention each country's artifacts when asked about a cultural topic
//! without naming a country.

pub mod audit;
pub mod generation;
pub mod kb;
pub mod localization;
pub mod net;
pub mod repository;
pub mod synthetic;
pub mod triage;
pub mod validation;

pub use repository::{
    normalize_name, ConceptId, CountryCode, CountryProfile, CountryProfiles, CulturalArtifact,
    LocalizationMode, Prong, Source, Status, Store, StoreError, UpsertOutcome,
};
