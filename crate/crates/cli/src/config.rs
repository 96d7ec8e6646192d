//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use cultura_core::generation::GenerationConfig;
use cultura_core::kb::SchemaSet;
use cultura_core::net::{ModelEndpoint, SearchEndpoint};
use cultura_core::triage::TriageConfig;
use cultura_core::CountryProfiles;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub store: Option<PathBuf>,
    pub schemas: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub battery: Option<PathBuf>,
    pub runs_dir: Option<PathBuf>,
    pub popularity_cache: Option<PathBuf>,
    pub answers_dir: Option<PathBuf>,
    pub verdict_log: Option<PathBuf>,
    pub annotators: Option<PathBuf>,
    pub reports_dir: Option<PathBuf>,
    pub manifests_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    #[serde(flatten)]
    pub loop_config: GenerationConfig,
    pub endpoint: Option<ModelEndpoint>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(flatten)]
    pub endpoint: SearchEndpoint,
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditedModel {
    pub tag: String,
    pub endpoint: ModelEndpoint,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default = "default_samples")]
    pub samples_per_prompt: u32,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub requests_per_second: Option<f64>,
    #[serde(default)]
    pub models: Vec<AuditedModel>,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            samples_per_prompt: default_samples(),
            workers: default_workers(),
            requests_per_second: None,
            models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "default_required")]
    pub required_verdicts: u32,
    #[serde(default = "default_lease")]
    pub lease_minutes: i64,
    #[serde(default = "default_bind")]
    pub bind: String,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            required_verdicts: default_required(),
            lease_minutes: default_lease(),
            bind: default_bind(),
        }
    }
}

fn default_workers() -> usize {
    4
}

fn default_samples() -> u32 {
    cultura_core::audit::DEFAULT_SAMPLES_PER_PROMPT
}

fn default_required() -> u32 {
    cultura_core::validation::DEFAULT_REQUIRED_VERDICTS
}

fn default_lease() -> i64 {
    30
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    paths: Paths,
    generation: Option<GenerationSection>,
    triage: Option<TriageConfig>,
    search: Option<SearchSection>,
    #[serde(default)]
    audit: AuditSection,
    #[serde(default)]
    validation: ValidationSection,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    base: PathBuf,
    paths: Paths,
    pub generation: Option<GenerationSection>,
    pub triage: TriageConfig,
    pub search: Option<SearchSection>,
    pub audit: AuditSection,
    pub validation: ValidationSection,
    /// sha256 of the config file bytes, or of the empty string without a file.
    pub hash: String,
    pub source: Option<PathBuf>,
}

impl PipelineConfig {
    /// Loads `path`; with no path, `cultura.toml` in the working directory is
    /// used when present, else defaults. Relative paths resolve against the
    /// config file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let (text, source) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
                Some(p.to_path_buf()),
            ),
            None if Path::new("cultura.toml").exists() => (
                std::fs::read_to_string("cultura.toml").map_err(|e| CliError::io("cultura.toml", e))?,
                Some(PathBuf::from("cultura.toml")),
            ),
            None => (String::new(), None),
        };
        let raw: RawConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        let base = source
            .as_deref()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(PipelineConfig {
            base,
            paths: raw.paths,
            generation: raw.generation,
            triage: raw.triage.unwrap_or_default(),
            search: raw.search,
            audit: raw.audit,
            validation: raw.validation,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            source,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn path_or(&self, p: &Option<PathBuf>, default: &str) -> PathBuf {
        self.resolve(p.as_deref().unwrap_or(Path::new(default)))
    }

    pub fn override_store(&mut self, store: PathBuf) {
        // command-line paths are relative to the working directory
        self.paths.store = Some(std::env::current_dir().map(|d| d.join(&store)).unwrap_or(store));
    }

    pub fn store_path(&self) -> PathBuf {
        self.path_or(&self.paths.store, "repository.jsonl")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.path_or(&self.paths.runs_dir, "runs")
    }

    pub fn popularity_cache(&self) -> PathBuf {
        self.path_or(&self.paths.popularity_cache, "popularity-cache.jsonl")
    }

    pub fn answers_dir(&self) -> PathBuf {
        self.path_or(&self.paths.answers_dir, "answers")
    }

    pub fn verdict_log(&self) -> PathBuf {
        self.path_or(&self.paths.verdict_log, "verdicts.jsonl")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.path_or(&self.paths.reports_dir, "reports")
    }

    pub fn manifests_dir(&self) -> PathBuf {
        self.path_or(&self.paths.manifests_dir, "manifests")
    }

    pub fn annotators(&self) -> Result<PathBuf, CliError> {
        let p = self.paths.annotators.as_deref().ok_or(CliError::MissingKey("paths.annotators"))?;
        existing(self.resolve(p))
    }

    /// Explicit schema file, if configured.
    pub fn schemas_path(&self) -> Option<PathBuf> {
        self.paths.schemas.as_deref().map(|p| self.resolve(p))
    }

    pub fn schemas(&self, cli: Option<&Path>) -> Result<(SchemaSet, Option<PathBuf>), CliError> {
        match cli.map(Path::to_path_buf).or_else(|| self.schemas_path()) {
            Some(p) => {
                let p = existing(p)?;
                Ok((SchemaSet::load(&p)?, Some(p)))
            }
            None => Ok((SchemaSet::builtin(), None)),
        }
    }

    pub fn profiles(&self) -> Result<(CountryProfiles, Option<PathBuf>), CliError> {
        match self.paths.profiles.as_deref() {
            Some(p) => {
                let p = existing(self.resolve(p))?;
                Ok((CountryProfiles::load(&p)?, Some(p)))
            }
            None => Ok((CountryProfiles::builtin(), None)),
        }
    }

    pub fn battery(&self) -> Result<(cultura_core::audit::PromptBattery, Option<PathBuf>), CliError> {
        match self.paths.battery.as_deref() {
            Some(p) => {
                let p = existing(self.resolve(p))?;
                Ok((cultura_core::audit::PromptBattery::load(&p)?, Some(p)))
            }
            None => Ok((cultura_core::audit::PromptBattery::builtin(), None)),
        }
    }

    pub fn generation_endpoint(&self) -> Result<&ModelEndpoint, CliError> {
        self.generation
            .as_ref()
            .and_then(|g| g.endpoint.as_ref())
            .ok_or(CliError::MissingKey("generation.endpoint"))
    }

    pub fn search_endpoint(&self) -> Result<&SearchSection, CliError> {
        self.search.as_ref().ok_or(CliError::MissingKey("search"))
    }
}

pub fn existing(p: PathBuf) -> Result<PathBuf, CliError> {
    if p.exists() {
        Ok(p)
    } else {
        Err(CliError::MissingInput {
            path: p,
            message: "file not found".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "").unwrap();
        let c = PipelineConfig::load(Some(&path)).unwrap();
        assert_eq!(c.store_path(), dir.path().join("repository.jsonl"));
        assert_eq!(c.triage.fraction, 0.30);
        assert!(matches!(c.generation_endpoint(), Err(CliError::MissingKey("generation.endpoint"))));
        assert!(matches!(c.annotators(), Err(CliError::MissingKey("paths.annotators"))));
    }

    #[test]
    fn full_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            r#"
[paths]
store = "data/repo.jsonl"

[generation]
items_per_cycle = 5
workers = 2

[generation.endpoint]
base_url = "http://localhost:9"
model_name = "m"
auth_env_var = "GEN_KEY"
sampling = { temperature = 0.7 }

[triage]
fraction = 0.5

[search]
auth_env_var = "SEARCH_KEY"
engine_id_env_var = "SEARCH_CX"

[[audit.models]]
tag = "m1"
endpoint = { base_url = "http://localhost:9", model_name = "m1", auth_env_var = "K1" }
"#,
        )
        .unwrap();
        let c = PipelineConfig::load(Some(&path)).unwrap();
        assert_eq!(c.store_path(), dir.path().join("data/repo.jsonl"));
        let g = c.generation.as_ref().unwrap();
        assert_eq!((g.loop_config.items_per_cycle, g.loop_config.max_cycles), (5, 10));
        assert_eq!(c.generation_endpoint().unwrap().model_name, "m");
        assert_eq!(c.triage.fraction, 0.5);
        assert_eq!(c.audit.models[0].tag, "m1");
        assert_eq!(c.audit.samples_per_prompt, 5);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[paths]\nstroe = \"x\"\n").unwrap();
        assert!(matches!(PipelineConfig::load(Some(&path)), Err(CliError::Config(_))));
    }
}
