use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{LocalizationError, RowError};
use crate::repository::{
    normalize_name, ConceptId, CountryCode, CountryProfiles, CulturalArtifact, Prong, Source, Status, Store,
    UpsertOutcome,
};

/// One row of the community exchange file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityRecord {
    pub name_local: String,
    pub language: String,
    pub country: String,
    pub concept: String,
    pub contributor_batch: String,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CommunityImport {
    pub artifacts: Vec<CulturalArtifact>,
    pub errors: Vec<RowError>,
}

impl CommunityRecord {
    fn into_artifact(self, profiles: &CountryProfiles) -> Result<CulturalArtifact, String> {
        let country = CountryCode::new(self.country.trim()).map_err(|e| e.to_string())?;
        let profile = profiles
            .get(&country)
            .ok_or_else(|| format!("country {country} is not configured"))?;
        if !profile.prongs.contains(&Prong::Community) {
            return Err(format!("country {country} has no community collection"));
        }
        let concept: ConceptId = self.concept.trim().parse().map_err(|e: crate::repository::UnknownConcept| e.to_string())?;
        if !concept.is_community() {
            return Err(format!("concept {concept} is not collected from the community"));
        }
        let name = self.name_local.trim();
        normalize_name(name).map_err(|e| format!("name_local: {e}"))?;
        let language = self.language.trim();
        if language.is_empty() {
            return Err("language is empty".into());
        }
        if language != profile.language {
            log::warn!("{country}: row language {language:?} differs from profile language {:?}", profile.language);
        }
        if self.contributor_batch.trim().is_empty() {
            return Err("contributor_batch is empty".into());
        }
        let mut origin_meta = BTreeMap::new();
        origin_meta.insert("contributor_batch".to_string(), self.contributor_batch.trim().to_string());
        if let Some(note) = self.note.as_deref().map(str::trim).filter(|n| !n.is_empty()) {
            origin_meta.insert("note".to_string(), note.to_string());
        }
        let mut a = CulturalArtifact {
            id: String::new(),
            name_en: String::new(),
            name_local: Some(name.to_string()),
            language: language.to_string(),
            country,
            concept,
            source: Source::Community,
            status: Status::Accepted,
            popularity: None,
            localization_mode: None,
            origin_meta,
        };
        a.id = a.derived_id().map_err(|e| e.to_string())?;
        Ok(a)
    }
}

/// Parses a community exchange file (comma-separated, header row required).
///
/// Bad rows are reported and skipped; a file with no usable row is an error.
pub fn import_community_records<R: Read>(reader: R, profiles: &CountryProfiles) -> Result<CommunityImport, LocalizationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Headers).flexible(false).from_reader(reader);
    let mut out = CommunityImport::default();
    for (i, row) in rdr.deserialize::<CommunityRecord>().enumerate() {
        // header is line 1
        let line = i + 2;
        match row {
            Ok(rec) => match rec.into_artifact(profiles) {
                Ok(a) => out.artifacts.push(a),
                Err(message) => out.errors.push(RowError { row: line, message }),
            },
            Err(e) => out.errors.push(RowError { row: line, message: e.to_string() }),
        }
    }
    for e in &out.errors {
        log::warn!("community row {}: {}", e.row, e.message);
    }
    if out.artifacts.is_empty() {
        return Err(LocalizationError::NoValidRows { errors: out.errors });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NoveltyReport {
    /// Rows whose normalized name was new to the store.
    pub novel: usize,
    pub already_known: usize,
}

/// Upserts community artifacts, counting which ones were previously uncovered.
pub fn ingest_community(store: &mut Store, artifacts: Vec<CulturalArtifact>) -> Result<NoveltyReport, LocalizationError> {
    let mut report = NoveltyReport::default();
    for a in artifacts {
        match store.upsert(a)? {
            UpsertOutcome::Inserted => report.novel += 1,
            UpsertOutcome::Merged | UpsertOutcome::Unchanged => report.already_known += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "name_local,language,country,concept,contributor_batch,note\n";

    fn import(rows: &str) -> Result<CommunityImport, LocalizationError> {
        import_community_records(format!("{HEADER}{rows}").as_bytes(), &CountryProfiles::builtin())
    }

    #[test]
    fn valid_rows_become_accepted_community_artifacts() {
        let r = import("Kenkey,ak,GH,cuisine,b1,\nBanku,ak,GH,cuisine,b1,fermented\nWaakye,ak,GH,cuisine,b2,\n").unwrap();
        assert_eq!(r.artifacts.len(), 3);
        assert!(r.errors.is_empty());
        let a = &r.artifacts[1];
        assert_eq!((a.source, a.status), (Source::Community, Status::Accepted));
        assert_eq!(a.name_en, "");
        assert_eq!(a.name_local.as_deref(), Some("Banku"));
        assert_eq!(a.origin_meta["note"], "fermented");
    }

    #[test]
    fn rejects_outside_community_configuration() {
        let r = import("Kenkey,ak,GH,cuisine,b1,\nAccra Mall,ak,GH,landmarks,b1,\nCrêpe,fr,FR,cuisine,b1,\n,ak,GH,cuisine,b1,\n").unwrap();
        assert_eq!(r.artifacts.len(), 1);
        let rows: Vec<usize> = r.errors.iter().map(|e| e.row).collect();
        assert_eq!(rows, [3, 4, 5]);
        assert!(r.errors[0].message.contains("landmarks"));
        assert!(r.errors[1].message.contains("FR"));
    }

    #[test]
    fn zero_valid_rows_fails() {
        assert!(matches!(import("Crêpe,fr,FR,cuisine,b1,\n"), Err(LocalizationError::NoValidRows { .. })));
        assert!(matches!(import(""), Err(LocalizationError::NoValidRows { .. })));
    }

    #[test]
    fn novelty_against_store() {
        let mut store = Store::new();
        let first = import("Kenkey,ak,GH,cuisine,b1,\n").unwrap();
        assert_eq!(ingest_community(&mut store, first.artifacts).unwrap().novel, 1);
        let again = import("KENKEY,ak,GH,cuisine,b2,\nBanku,ak,GH,cuisine,b2,\n").unwrap();
        let rep = ingest_community(&mut store, again.artifacts).unwrap();
        assert_eq!((rep.novel, rep.already_known), (1, 1));
    }
}
