use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LocalizationError, RowError};
use crate::repository::{normalize_name, write_atomic, CountryProfiles, CulturalArtifact, LocalizationMode, Source, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToEnglish,
    ToLocal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationJob {
    pub artifact_id: String,
    pub direction: Direction,
    pub source_text: String,
    /// Language of the text to produce.
    pub target_language: String,
    #[serde(default)]
    pub result_text: Option<String>,
    #[serde(default)]
    pub mode: Option<LocalizationMode>,
    /// Romanization of `source_text`, for terms kept as-is across scripts.
    #[serde(default)]
    pub transliteration: Option<String>,
    #[serde(default)]
    pub translator_batch: Option<String>,
}

fn needs(a: &CulturalArtifact, direction: Direction, profiles: &CountryProfiles) -> bool {
    match direction {
        Direction::ToEnglish => a.name_en.trim().is_empty(),
        Direction::ToLocal => {
            a.source != Source::Community
                && a.name_local.as_deref().is_none_or(|n| n.trim().is_empty())
                && profiles.get(&a.country).is_some_and(|p| p.translated)
        }
    }
}

/// Jobs for every artifact missing the name in `direction`'s target language.
/// `None` exports both directions. Ordered by direction, country, concept, id.
pub fn export_translation_jobs(store: &Store, profiles: &CountryProfiles, direction: Option<Direction>) -> Vec<TranslationJob> {
    let directions: &[Direction] = match direction {
        Some(Direction::ToEnglish) => &[Direction::ToEnglish],
        Some(Direction::ToLocal) => &[Direction::ToLocal],
        None => &[Direction::ToEnglish, Direction::ToLocal],
    };
    let mut jobs = Vec::new();
    for &d in directions {
        let mut batch: Vec<&CulturalArtifact> = store.iter().filter(|a| needs(a, d, profiles)).collect();
        batch.sort_by(|x, y| (&x.country, x.concept, &x.id).cmp(&(&y.country, y.concept, &y.id)));
        for a in batch {
            let (source_text, target_language) = match d {
                Direction::ToEnglish => (a.name_local.clone().unwrap_or_default(), "en".to_string()),
                Direction::ToLocal => (a.name_en.clone(), a.language.clone()),
            };
            jobs.push(TranslationJob {
                artifact_id: a.id.clone(),
                direction: d,
                source_text,
                target_language,
                result_text: None,
                mode: None,
                transliteration: None,
                translator_batch: None,
            });
        }
    }
    jobs
}

pub fn write_jobs(path: &Path, jobs: &[TranslationJob]) -> Result<(), LocalizationError> {
    let mut out = String::new();
    for j in jobs {
        out.push_str(&serde_json::to_string(j).expect("job serializes"));
        out.push('\n');
    }
    Ok(write_atomic(path, out.as_bytes())?)
}

/// Jobs tagged with their 1-based line numbers, plus unparseable lines.
pub type ParsedJobs = (Vec<(usize, TranslationJob)>, Vec<RowError>);

/// Reads a job file. Unparseable lines become row errors.
pub fn read_jobs(path: &Path) -> Result<ParsedJobs, LocalizationError> {
    let text = fs::read_to_string(path).map_err(|e| LocalizationError::io(path, e))?;
    Ok(parse_jobs(&text))
}

pub fn parse_jobs(text: &str) -> ParsedJobs {
    let mut jobs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(j) => jobs.push((i + 1, j)),
            Err(e) => errors.push(RowError { row: i + 1, message: e.to_string() }),
        }
    }
    (jobs, errors)
}

/// Checks a completed job for the kept-as-is rule: a term localized as-is
/// into English must equal its source, or the supplied romanization of the
/// source, up to normalization.
pub fn check_job(job: &TranslationJob) -> Result<(&str, LocalizationMode), String> {
    let result = job
        .result_text
        .as_deref()
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .ok_or("result_text is empty")?;
    let mode = job.mode.ok_or("mode is not set")?;
    let result_key = normalize_name(result).map_err(|e| format!("result_text: {e}"))?;
    if mode == LocalizationMode::LocalizedAsIs && job.direction == Direction::ToEnglish {
        let same = |s: &str| normalize_name(s).is_ok_and(|k| k == result_key);
        let ok = same(&job.source_text) || job.transliteration.as_deref().is_some_and(same);
        if !ok {
            return Err(format!(
                "localized_as_is result {result:?} does not match source {:?}{}",
                job.source_text,
                job.transliteration.as_deref().map(|t| format!(" or transliteration {t:?}")).unwrap_or_default()
            ));
        }
    }
    Ok((result, mode))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TranslationImport {
    pub applied: usize,
    pub unchanged: usize,
    pub errors: Vec<RowError>,
}

/// Writes completed jobs into the store. Each row is checked and applied on
/// its own; failed rows are reported and leave their artifact untouched.
pub fn import_translations(store: &mut Store, jobs: &[(usize, TranslationJob)]) -> Result<TranslationImport, LocalizationError> {
    let mut report = TranslationImport::default();
    for (row, job) in jobs {
        let row = *row;
        let Some(current) = store.get(&job.artifact_id) else {
            report.errors.push(RowError { row, message: format!("unknown artifact {}", job.artifact_id) });
            continue;
        };
        let (result, mode) = match check_job(job) {
            Ok(v) => v,
            Err(message) => {
                report.errors.push(RowError { row, message });
                continue;
            }
        };
        let existing = match job.direction {
            Direction::ToEnglish => Some(current.name_en.as_str()).filter(|s| !s.trim().is_empty()),
            Direction::ToLocal => current.name_local.as_deref().filter(|s| !s.trim().is_empty()),
        };
        if let Some(existing) = existing {
            if existing == result && current.localization_mode == Some(mode) {
                report.unchanged += 1;
            } else {
                report.errors.push(RowError { row, message: format!("target name already set to {existing:?}") });
            }
            continue;
        }
        let batch = job.translator_batch.clone();
        let result = result.to_string();
        let applied = store.modify(&job.artifact_id, |a| {
            match job.direction {
                Direction::ToEnglish => a.name_en = result,
                Direction::ToLocal => a.name_local = Some(result),
            }
            a.localization_mode = Some(mode);
            if let Some(b) = batch {
                a.origin_meta.insert("translator_batch".into(), b);
            }
        });
        match applied {
            Ok(()) => report.applied += 1,
            Err(e) => report.errors.push(RowError { row, message: e.to_string() }),
        }
    }
    for e in &report.errors {
        log::warn!("translation row {}: {}", e.row, e.message);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::{ConceptId, CountryCode, Status};

    fn community(local: &str, country: &str, lang: &str) -> CulturalArtifact {
        let mut a = CulturalArtifact {
            id: String::new(),
            name_en: String::new(),
            name_local: Some(local.into()),
            language: lang.into(),
            country: CountryCode::new(country).unwrap(),
            concept: ConceptId::ClothingAccessories,
            source: Source::Community,
            status: Status::Accepted,
            popularity: None,
            localization_mode: None,
            origin_meta: Default::default(),
        };
        a.id = a.derived_id().unwrap();
        a
    }

    fn kb(name: &str, country: &str, lang: &str) -> CulturalArtifact {
        CulturalArtifact::new(name, lang, CountryCode::new(country).unwrap(), ConceptId::HolidaysFestivals, Source::KnowledgeBase, Status::KbTrusted).unwrap()
    }

    fn complete(j: &TranslationJob, result: &str, mode: LocalizationMode) -> TranslationJob {
        TranslationJob {
            result_text: Some(result.into()),
            mode: Some(mode),
            ..j.clone()
        }
    }

    #[test]
    fn export_selects_missing_names() {
        let mut s = Store::new();
        s.upsert(community("着物", "JP", "ja")).unwrap();
        s.upsert(community("Dirndl", "DE", "de")).unwrap();
        s.upsert(kb("Thanksgiving", "US", "en")).unwrap();
        s.upsert(kb("Tag der Deutschen Einheit", "DE", "de")).unwrap();
        let p = CountryProfiles::builtin();
        assert_eq!(export_translation_jobs(&s, &p, Some(Direction::ToEnglish)).len(), 2);
        let local = export_translation_jobs(&s, &p, Some(Direction::ToLocal));
        assert_eq!(local.len(), 1);
        assert_eq!(local[0].source_text, "Tag der Deutschen Einheit");
    }

    #[test]
    fn kept_as_is_rule() {
        let base = TranslationJob {
            artifact_id: "x".into(),
            direction: Direction::ToEnglish,
            source_text: "Dirndl".into(),
            target_language: "en".into(),
            result_text: None,
            mode: None,
            transliteration: None,
            translator_batch: None,
        };
        assert!(check_job(&complete(&base, "dirndl", LocalizationMode::LocalizedAsIs)).is_ok());
        assert!(check_job(&complete(&base, "dress", LocalizationMode::LocalizedAsIs)).is_err());
        assert!(check_job(&complete(&base, "dress", LocalizationMode::Translated)).is_ok());
        assert!(check_job(&complete(&base, " ", LocalizationMode::Translated)).is_err());
        assert!(check_job(&base).is_err());

        let kimono = TranslationJob { source_text: "着物".into(), ..base.clone() };
        assert!(check_job(&complete(&kimono, "kimono", LocalizationMode::LocalizedAsIs)).is_err());
        let romanized = TranslationJob { transliteration: Some("Kimono".into()), ..kimono };
        assert!(check_job(&complete(&romanized, "kimono", LocalizationMode::LocalizedAsIs)).is_ok());
        assert!(check_job(&complete(&romanized, "dress", LocalizationMode::LocalizedAsIs)).is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let mut s = Store::new();
        s.upsert(community("着物", "JP", "ja")).unwrap();
        s.upsert(kb("Tag der Deutschen Einheit", "DE", "de")).unwrap();
        let p = CountryProfiles::builtin();
        let jobs = export_translation_jobs(&s, &p, None);
        assert_eq!(jobs.len(), 2);
        let done: Vec<(usize, TranslationJob)> = jobs
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let filled = match j.direction {
                    Direction::ToEnglish => TranslationJob {
                        transliteration: Some("kimono".into()),
                        ..complete(j, "kimono", LocalizationMode::LocalizedAsIs)
                    },
                    Direction::ToLocal => complete(j, "Tag der Deutschen Einheit", LocalizationMode::LocalizedAsIs),
                };
                (i + 1, filled)
            })
            .collect();
        let rep = import_translations(&mut s, &done).unwrap();
        assert_eq!((rep.applied, rep.errors.len()), (2, 0));
        assert!(export_translation_jobs(&s, &p, None).is_empty());
        let k = s.iter().find(|a| a.name_en == "kimono").unwrap();
        assert_eq!(k.name_local.as_deref(), Some("着物"));
        assert_eq!(k.status, Status::Accepted);
        assert_eq!(k.localization_mode, Some(LocalizationMode::LocalizedAsIs));

        let again = import_translations(&mut s, &done).unwrap();
        assert_eq!((again.applied, again.unchanged), (0, 2));
    }

    #[test]
    fn translated_holiday_name() {
        let mut s = Store::new();
        s.upsert(community("Tag der Deutschen Einheit", "DE", "de")).unwrap();
        let jobs = export_translation_jobs(&s, &CountryProfiles::builtin(), Some(Direction::ToEnglish));
        let done = vec![(1, complete(&jobs[0], "German Unity Day", LocalizationMode::Translated))];
        import_translations(&mut s, &done).unwrap();
        assert!(s.iter().any(|a| a.name_en == "German Unity Day"));
    }

    #[test]
    fn unknown_artifact_is_row_error() {
        let mut s = Store::new();
        let job = TranslationJob {
            artifact_id: "missing".into(),
            direction: Direction::ToEnglish,
            source_text: "x".into(),
            target_language: "en".into(),
            result_text: Some("x".into()),
            mode: Some(LocalizationMode::Translated),
            transliteration: None,
            translator_batch: None,
        };
        let rep = import_translations(&mut s, &[(4, job)]).unwrap();
        assert_eq!(rep.errors[0].row, 4);
    }
}
