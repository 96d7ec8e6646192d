use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::parse::parse_item_list;
use super::prompt::render_prompt;
use super::GenerationError;
use crate::net::TextModel;
use crate::repository::{
    normalize_name, write_atomic, ConceptId, CountryCode, CulturalArtifact, Source, Status,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default = "default_items")]
    pub items_per_cycle: u32,
    #[serde(default = "default_cycles")]
    pub max_cycles: u32,
}

fn default_items() -> u32 {
    30
}

fn default_cycles() -> u32 {
    10
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            items_per_cycle: default_items(),
            max_cycles: default_cycles(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.items_per_cycle == 0 || self.max_cycles == 0 {
            return Err(GenerationError::Config("items_per_cycle and max_cycles must be positive".into()));
        }
        Ok(())
    }

    pub fn cap(&self) -> usize {
        self.items_per_cycle as usize * self.max_cycles as usize
    }
}

/// One (country, concept) generation target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationPair {
    pub country: CountryCode,
    pub country_name: String,
    pub language: String,
    pub concept: ConceptId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationCycle {
    pub index: u32,
    /// Normalized exclusion list the cycle was filtered against.
    pub exclusion_snapshot: Vec<String>,
    pub raw_output: String,
    pub parsed_items: Vec<String>,
    pub new_items: Vec<String>,
    pub parse_miss: bool,
    pub resumed: bool,
    pub transcript: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct GenerationRun {
    pub cycles: Vec<GenerationCycle>,
    pub candidates: Vec<CulturalArtifact>,
}

/// Transcript directory for a pair: `<runs>/<country>/<concept>`.
pub fn pair_dir(runs_dir: &Path, pair: &GenerationPair) -> PathBuf {
    runs_dir.join(pair.country.as_str()).join(pair.concept.as_str())
}

pub fn cycle_path(dir: &Path, index: u32) -> PathBuf {
    dir.join(format!("cycle-{index}.txt"))
}

const BASE_EXCLUSION_FILE: &str = "base-exclusion.txt";

/// Runs the exclusion-list loop for one pair.
///
/// Cycle k is prompted with the base list plus every item accepted in
/// cycles 1..k. Each raw response is written to `cycle-<k>.txt` before it is
/// parsed; existing transcripts are replayed instead of re-querying, so an
/// interrupted run resumes with identical exclusion state. The base list
/// itself is frozen in the pair directory on first use.
pub fn run_generation(
    pair: &GenerationPair,
    kb_list: &[String],
    model: &dyn TextModel,
    config: &GenerationConfig,
    runs_dir: &Path,
) -> Result<GenerationRun, GenerationError> {
    config.validate()?;
    let dir = pair_dir(runs_dir, pair);
    fs::create_dir_all(&dir).map_err(|e| GenerationError::io(&dir, e))?;
    let base = freeze_base(&dir, kb_list)?;

    let mut display: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for name in &base {
        if let Ok(key) = normalize_name(name) {
            if seen.insert(key) {
                display.push(name.clone());
            }
        }
    }

    let mut run = GenerationRun::default();
    for index in 1..=config.max_cycles {
        let path = cycle_path(&dir, index);
        let (raw, resumed) = if path.exists() {
            (fs::read_to_string(&path).map_err(|e| GenerationError::io(&path, e))?, true)
        } else {
            let prompt = render_prompt(pair.concept, &pair.country_name, &display, config.items_per_cycle);
            match model.complete(&prompt) {
                Ok(raw) => {
                    write_atomic(&path, raw.as_bytes())?;
                    (raw, false)
                }
                Err(source) => {
                    return Err(GenerationError::Aborted {
                        cycle: index,
                        completed: Box::new(run),
                        source,
                    })
                }
            }
        };

        let parsed = parse_item_list(&raw, config.items_per_cycle as usize);
        if parsed.parse_miss {
            log::warn!("{}: cycle {index} produced no parseable items", dir.display());
        }
        let mut snapshot: Vec<String> = seen.iter().cloned().collect();
        snapshot.sort();
        let mut new_items = Vec::new();
        for item in &parsed.items {
            if new_items.len() >= config.items_per_cycle as usize {
                break;
            }
            let Ok(key) = normalize_name(item) else { continue };
            if seen.insert(key) {
                new_items.push(item.clone());
            }
        }
        for item in &new_items {
            let mut a = CulturalArtifact::new(
                item.clone(),
                pair.language.clone(),
                pair.country.clone(),
                pair.concept,
                Source::LlmGenerated,
                Status::PendingValidation,
            )?;
            a.origin_meta.insert("cycle".into(), index.to_string());
            a.origin_meta.insert("model".into(), model.model_tag().to_string());
            a.origin_meta.insert("transcript".into(), path.display().to_string());
            run.candidates.push(a);
        }
        display.extend(new_items.iter().cloned());
        run.cycles.push(GenerationCycle {
            index,
            exclusion_snapshot: snapshot,
            raw_output: raw,
            parsed_items: parsed.items,
            new_items,
            parse_miss: parsed.parse_miss,
            resumed,
            transcript: path,
        });
    }
    Ok(run)
}

fn freeze_base(dir: &Path, kb_list: &[String]) -> Result<Vec<String>, GenerationError> {
    let path = dir.join(BASE_EXCLUSION_FILE);
    if path.exists() {
        let text = fs::read_to_string(&path).map_err(|e| GenerationError::io(&path, e))?;
        let frozen: Vec<String> = text.lines().map(str::to_string).collect();
        if frozen != kb_list {
            log::warn!("{}: base exclusion list differs from store; using frozen copy", path.display());
        }
        return Ok(frozen);
    }
    let mut text = String::new();
    for name in kb_list {
        text.push_str(&name.replace('\n', " "));
        text.push('\n');
    }
    write_atomic(&path, text.as_bytes())?;
    Ok(kb_list.to_vec())
}
