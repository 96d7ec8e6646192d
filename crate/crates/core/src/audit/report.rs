use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::answers::ModelAnswer;
use super::metric::{concept_fraction, exact_average, round2, ConceptScore};
use super::AuditError;
use crate::repository::{write_atomic, ConceptId, CountryCode, CountryProfiles, Status, Store};

const USABLE: [Status; 3] = [Status::KbTrusted, Status::HeuristicAccepted, Status::Accepted];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationReport {
    pub model_tag: String,
    pub samples_per_prompt: u32,
    pub scores: BTreeMap<CountryCode, BTreeMap<ConceptId, ConceptScore>>,
    /// Unrounded mean of the seven fractions.
    pub averages: BTreeMap<CountryCode, f64>,
}

impl RepresentationReport {
    pub fn fraction(&self, country: &CountryCode, concept: ConceptId) -> Option<f64> {
        self.scores.get(country)?.get(&concept).map(|s| s.fraction.value())
    }

    /// (country, concept) cells with no artifacts in the store.
    pub fn coverage_gaps(&self) -> Vec<(CountryCode, ConceptId)> {
        self.scores
            .iter()
            .flat_map(|(c, row)| row.iter().filter(|(_, s)| !s.covered).map(move |(k, _)| (c.clone(), *k)))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AuditError::Report(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), AuditError> {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        Ok(write_atomic(path, text.as_bytes())?)
    }
}

/// Scores every profiled country against one model's answers, using the
/// store's usable artifacts.
pub fn compute_report(
    model_tag: &str,
    samples_per_prompt: u32,
    answers: &[ModelAnswer],
    store: &Store,
    profiles: &CountryProfiles,
) -> Result<RepresentationReport, AuditError> {
    let mut by_concept: BTreeMap<ConceptId, Vec<&str>> = BTreeMap::new();
    for a in answers.iter().filter(|a| a.model_tag == model_tag) {
        by_concept.entry(a.concept).or_default().push(&a.text);
    }
    let mut report = RepresentationReport {
        model_tag: model_tag.to_string(),
        samples_per_prompt,
        scores: BTreeMap::new(),
        averages: BTreeMap::new(),
    };
    for profile in profiles.iter() {
        let mut row = BTreeMap::new();
        for concept in ConceptId::ALL {
            let texts = by_concept.get(&concept).map(Vec::as_slice).unwrap_or(&[]);
            let artifacts = store.filter(Some(&profile.country), Some(concept), Some(&USABLE));
            let score = concept_fraction(texts, &artifacts);
            if !score.covered {
                log::warn!("{} has no usable {concept} artifacts; scored as 0", profile.country);
            }
            row.insert(concept, score);
        }
        let fractions = row.iter().map(|(c, s)| (*c, s.fraction)).collect();
        let (num, den) = exact_average(&fractions)?;
        report.averages.insert(profile.country.clone(), num as f64 / den as f64);
        report.scores.insert(profile.country.clone(), row);
    }
    Ok(report)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn country_name(profiles: &CountryProfiles, code: &CountryCode) -> String {
    profiles.get(code).map(|p| p.name.clone()).unwrap_or_else(|| code.to_string())
}

pub fn fraction_table(report: &RepresentationReport, profiles: &CountryProfiles) -> String {
    let mut out = String::from("Code,Country");
    for c in ConceptId::REPORT_ORDER {
        write!(out, ",{}", csv_field(c.heading())).unwrap();
    }
    out.push_str(",Average\n");
    for (code, row) in &report.scores {
        write!(out, "{},{}", code, csv_field(&country_name(profiles, code))).unwrap();
        for c in ConceptId::REPORT_ORDER {
            let v = row.get(&c).map(|s| s.fraction.value()).unwrap_or(0.0);
            write!(out, ",{:.2}", round2(v)).unwrap();
        }
        writeln!(out, ",{:.2}", round2(report.averages[code])).unwrap();
    }
    out
}

pub fn average_table(report: &RepresentationReport, profiles: &CountryProfiles) -> String {
    let mut out = String::from("Code,Country,Average\n");
    for (code, avg) in &report.averages {
        writeln!(out, "{},{},{:.2}", code, csv_field(&country_name(profiles, code)), round2(*avg)).unwrap();
    }
    out
}

/// Code → score lines for external map tools.
pub fn choropleth_table(averages: &BTreeMap<CountryCode, f64>) -> String {
    let mut out = String::from("iso_a2,score\n");
    for (code, avg) in averages {
        writeln!(out, "{},{:.2}", code, round2(*avg)).unwrap();
    }
    out
}

/// Per-country mean of the reports' (unrounded) averages, over countries
/// present in every report.
pub fn cross_model_average(reports: &[RepresentationReport]) -> BTreeMap<CountryCode, f64> {
    let Some(first) = reports.first() else { return BTreeMap::new() };
    first
        .averages
        .keys()
        .filter(|c| reports.iter().all(|r| r.averages.contains_key(*c)))
        .map(|c| {
            let sum: f64 = reports.iter().map(|r| r.averages[c]).sum();
            (c.clone(), sum / reports.len() as f64)
        })
        .collect()
}

/// Writes fraction, average and map tables per report, plus cross-model
/// tables when more than one report is given. Returns the written paths.
pub fn emit_report(reports: &[RepresentationReport], profiles: &CountryProfiles, out_dir: &Path) -> Result<Vec<PathBuf>, AuditError> {
    std::fs::create_dir_all(out_dir).map_err(|e| AuditError::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), AuditError> {
        let path = out_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
        Ok(())
    };
    for r in reports {
        let tag = &r.model_tag;
        put(format!("{tag}.fractions.csv"), fraction_table(r, profiles))?;
        put(format!("{tag}.averages.csv"), average_table(r, profiles))?;
        put(format!("{tag}.choropleth.csv"), choropleth_table(&r.averages))?;
    }
    if reports.len() > 1 {
        let mean = cross_model_average(reports);
        let mut body = String::from("Code,Country");
        for r in reports {
            write!(body, ",{}", csv_field(&r.model_tag)).unwrap();
        }
        body.push_str(",Mean\n");
        for (code, m) in &mean {
            write!(body, "{},{}", code, csv_field(&country_name(profiles, code))).unwrap();
            for r in reports {
                write!(body, ",{:.2}", round2(r.averages[code])).unwrap();
            }
            writeln!(body, ",{:.2}", round2(*m)).unwrap();
        }
        put("cross_model.averages.csv".into(), body)?;
        put("cross_model.choropleth.csv".into(), choropleth_table(&mean))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::Fraction;
    use crate::repository::{CulturalArtifact, Source};

    fn answers(tag: &str, concept: ConceptId, texts: &[&str]) -> Vec<ModelAnswer> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| ModelAnswer {
                model_tag: tag.into(),
                concept,
                prompt_index: (i as u32 / 5) + 1,
                sample_index: (i as u32 % 5) + 1,
                text: t.to_string(),
            })
            .collect()
    }

    fn store() -> Store {
        let mut s = Store::new();
        let jp = CountryCode::new("JP").unwrap();
        s.upsert(CulturalArtifact::new("sushi", "ja", jp.clone(), ConceptId::Cuisine, Source::KnowledgeBase, Status::KbTrusted).unwrap()).unwrap();
        let mut rejected = CulturalArtifact::new("pizza", "ja", jp, ConceptId::Cuisine, Source::LlmGenerated, Status::Rejected).unwrap();
        rejected.popularity = Some(3);
        s.upsert(rejected).unwrap();
        s
    }

    #[test]
    fn only_usable_artifacts_count() {
        let a = answers("m", ConceptId::Cuisine, &["sushi", "pizza", "none", "sushi again"]);
        let r = compute_report("m", 1, &a, &store(), &CountryProfiles::builtin()).unwrap();
        let jp = CountryCode::new("JP").unwrap();
        assert_eq!(r.scores[&jp][&ConceptId::Cuisine].fraction, Fraction { hits: 2, total: 4 });
        assert_eq!(r.scores.len(), 29);
        assert!(r.coverage_gaps().len() > 100);
    }

    #[test]
    fn files_and_cross_model() {
        let dir = tempfile::tempdir().unwrap();
        let p = CountryProfiles::builtin();
        let a = answers("a", ConceptId::Cuisine, &["sushi"; 4]);
        let b = answers("b", ConceptId::Cuisine, &["none"; 4]);
        let ra = compute_report("a", 1, &a, &store(), &p).unwrap();
        let rb = compute_report("b", 1, &b, &store(), &p).unwrap();
        assert_eq!(emit_report(std::slice::from_ref(&ra), &p, dir.path()).unwrap().len(), 3);
        let files = emit_report(&[ra.clone(), rb], &p, dir.path()).unwrap();
        assert_eq!(files.len(), 8);
        let cross = std::fs::read_to_string(dir.path().join("cross_model.averages.csv")).unwrap();
        assert_eq!(cross.lines().count(), 30);
        assert!(cross.contains("JP,Japan,0.14,0.00,0.07"), "{cross}");
        let table = fraction_table(&ra, &p);
        assert!(table.starts_with("Code,Country,Cuisine,Holidays & Festivals,Clothing & Accessories,Landmarks,Historical Events,Sportspeople,Sports Teams,Average\n"));

        let path = dir.path().join("a.report.json");
        ra.save(&path).unwrap();
        assert_eq!(RepresentationReport::load(&path).unwrap(), ra);
    }
}
