//! Deterministic synthetic Wikidata dumps for fixtures and benchmarks.
//!
//! The generated dump contains a class hierarchy labelled with the bundled
//! schema's class names, a fixed set of planted cultural entities, decoys
//! that must not be extracted, and filler entities up to the requested size.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::kb::SchemaSet;
use crate::repository::ConceptId;

/// One entity the extractor is expected to emit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlantedMatch {
    pub qid: String,
    pub concept: ConceptId,
    pub country: &'static str,
    pub label: &'static str,
}

#[derive(Debug, Clone)]
pub struct SyntheticDump {
    pub text: String,
    pub entity_count: usize,
    pub planted: Vec<PlantedMatch>,
    /// Entity that only matches once closure depth reaches 2.
    pub deep_decoy: String,
}

const SUBCLASS: &str = "P279";
const INSTANCE: &str = "P31";

struct Builder {
    lines: Vec<String>,
    next_qid: u64,
    classes: BTreeMap<String, String>,
}

impl Builder {
    fn qid(&mut self) -> String {
        self.next_qid += 1;
        format!("Q{}", self.next_qid)
    }

    fn push(&mut self, qid: &str, labels: &[(&str, &str)], claims: &[(&str, &str)]) {
        let mut label_map = Map::new();
        for (lang, value) in labels {
            label_map.insert(lang.to_string(), json!({"language": lang, "value": value}));
        }
        let mut claim_map: Map<String, Value> = Map::new();
        for (prop, target) in claims {
            let statement = json!({
                "mainsnak": {
                    "snaktype": "value",
                    "property": prop,
                    "datavalue": {"value": {"entity-type": "item", "id": target}, "type": "wikibase-entityid"}
                },
                "type": "statement",
                "rank": "normal"
            });
            claim_map
                .entry(prop.to_string())
                .or_insert_with(|| Value::Array(Vec::new()))
                .as_array_mut()
                .expect("array")
                .push(statement);
        }
        let labels = if label_map.is_empty() { json!([]) } else { Value::Object(label_map) };
        let entity = json!({"type": "item", "id": qid, "labels": labels, "claims": Value::Object(claim_map)});
        self.lines.push(entity.to_string());
    }

    fn class(&mut self, label: &str) -> String {
        if let Some(q) = self.classes.get(label) {
            return q.clone();
        }
        let q = self.qid();
        self.push(&q, &[("en", &label.to_lowercase())], &[]);
        self.classes.insert(label.to_string(), q.clone());
        q
    }

    fn subclass(&mut self, label: &str, parent: &str) -> String {
        let q = self.qid();
        self.push(&q, &[("en", label)], &[(SUBCLASS, parent)]);
        q
    }
}

/// Countries referenced by claims in the fixture (Wikidata ids).
const JP: &str = "Q17";
const DE: &str = "Q183";
const MX: &str = "Q96";
const IN: &str = "Q668";
const US: &str = "Q30";
const PE: &str = "Q419";
const ES: &str = "Q29";
const AR: &str = "Q414";
const IT: &str = "Q38";
const CH: &str = "Q39";
const FILLER_COUNTRIES: [&str; 6] = [JP, DE, MX, IN, US, "Q155"];
type Plant = (&'static str, ConceptId, &'static str, Vec<(&'static str, String)>);

const HUMAN: &str = "Q5";
const FOOTBALL: &str = "Q2736";

/// Builds a dump of exactly `entities` item lines (minimum 80) and
/// `corrupt` additional unparseable lines spread through the file.
pub fn generate(entities: usize, corrupt: usize) -> SyntheticDump {
    let schemas = SchemaSet::builtin();
    let mut b = Builder {
        lines: Vec::new(),
        next_qid: 900_000,
        classes: BTreeMap::new(),
    };

    b.push(HUMAN, &[("en", "human")], &[]);
    for s in &schemas.schemas {
        for label in &s.node_classes {
            if label != "human" {
                b.class(label);
            }
        }
    }
    let dish = b.class("dish");
    let noodle = b.subclass("noodle dish", &dish);
    let deep = b.subclass("regional noodle dish", &noodle);
    let city = b.subclass("city", "Q0");
    let writer = b.subclass("writer", "Q0");

    let mut planted = Vec::new();
    let plants: Vec<Plant> = vec![
        ("Dirndl", ConceptId::ClothingAccessories, "DE", vec![(INSTANCE, b.class("traditional costume")), ("P495", DE.into())]),
        ("Kimono", ConceptId::ClothingAccessories, "JP", vec![("P361", b.class("clothing")), ("P495", JP.into())]),
        ("Sushi", ConceptId::Cuisine, "JP", vec![(INSTANCE, dish.clone()), ("P495", JP.into())]),
        ("Tonkotsu ramen", ConceptId::Cuisine, "JP", vec![(INSTANCE, noodle.clone()), ("P495", JP.into())]),
        ("Mexican Revolution", ConceptId::HistoricalEvents, "MX", vec![(INSTANCE, b.class("revolution")), ("P17", MX.into())]),
        ("Diwali", ConceptId::HolidaysFestivals, "IN", vec![(INSTANCE, b.class("holiday")), ("P17", IN.into())]),
        ("Thanksgiving", ConceptId::HolidaysFestivals, "US", vec![(INSTANCE, b.class("federal holiday")), ("P17", US.into())]),
        ("Machu Picchu", ConceptId::Landmarks, "PE", vec![(INSTANCE, b.class("archaeological site")), ("P17", PE.into())]),
        ("Brandenburg Gate", ConceptId::Landmarks, "DE", vec![(INSTANCE, b.class("triumphal arch")), ("P17", DE.into())]),
        ("Alexia Putellas", ConceptId::Sportspeople, "ES", vec![(INSTANCE, HUMAN.into()), ("P641", FOOTBALL.into()), ("P17", ES.into())]),
        ("Diego Contreras", ConceptId::Sportspeople, "ES", vec![(INSTANCE, HUMAN.into()), ("P641", FOOTBALL.into()), ("P17", AR.into()), ("P1532", ES.into())]),
        ("Boca Juniors", ConceptId::SportsTeams, "AR", vec![(INSTANCE, b.class("association football club")), ("P17", AR.into())]),
    ];
    let mut planted_lines = Vec::new();
    for (label, concept, country, claims) in plants {
        let q = b.qid();
        let claims: Vec<(&str, &str)> = claims.iter().map(|(p, v)| (*p, v.as_str())).collect();
        b.push(&q, &[("en", label)], &claims);
        planted_lines.push(b.lines.pop().expect("just pushed"));
        planted.push(PlantedMatch { qid: q, concept, country, label });
    }

    // decoys
    let deep_decoy = b.qid();
    b.push(&deep_decoy, &[("en", "Hiyashi chuka")], &[(INSTANCE, &deep), ("P495", JP)]);
    let q = b.qid();
    b.push(&q, &[("ja", "おにぎり")], &[(INSTANCE, &dish), ("P495", JP)]);
    let q = b.qid();
    let bridge = b.class("bridge");
    b.push(&q, &[("en", "Chapel Bridge")], &[(INSTANCE, &bridge), ("P17", CH)]);
    let q = b.qid();
    b.push(&q, &[("en", "Haruki Murakami")], &[(INSTANCE, HUMAN), ("P106", &writer), ("P17", JP)]);
    let q = b.qid();
    b.push(&q, &[("en", "Trattoria")], &[(INSTANCE, "Q999"), ("P495", IT)]);
    b.lines.push(r#"{"type":"property","id":"P31","labels":{"en":{"language":"en","value":"instance of"}}}"#.into());

    let mut i = 0usize;
    // one non-item line is in `lines`
    while b.lines.len() - 1 + planted_lines.len() < entities {
        let q = b.qid();
        let country = FILLER_COUNTRIES[i % FILLER_COUNTRIES.len()];
        let label = format!("Filler place {i}");
        match i % 4 {
            0 => b.push(&q, &[("en", &label)], &[(INSTANCE, &city), ("P17", country)]),
            1 => b.push(&q, &[("en", &label), ("de", &label)], &[("P131", country)]),
            2 => b.push(&q, &[("en", &label)], &[(INSTANCE, &writer), ("P495", country)]),
            _ => b.push(&q, &[], &[(INSTANCE, "Q999")]),
        }
        i += 1;
    }
    let entity_count = b.lines.len() - 1 + planted_lines.len();

    // spread planted entities and corrupt lines through the body
    let mut body = b.lines;
    let gap = body.len() / (planted_lines.len() + 1);
    for (k, line) in planted_lines.into_iter().enumerate().rev() {
        body.insert(gap * (k + 1), line);
    }
    let n = body.len();
    let stride = if corrupt == 0 { usize::MAX } else { (n / (corrupt + 1)).max(1) };

    let mut text = String::from("[\n");
    let mut inserted = 0usize;
    for (k, line) in body.iter().enumerate() {
        if inserted < corrupt && k > 0 && k % stride == 0 {
            text.push_str("{\"type\":\"item\",\"id\":\"Q1\",\"labels\":{\n");
            inserted += 1;
        }
        let sep = if k + 1 == n { "" } else { "," };
        writeln!(text, "{line}{sep}").expect("write to string");
    }
    while inserted < corrupt {
        text.push_str("not json at all\n");
        inserted += 1;
    }
    text.push_str("]\n");

    planted.sort();
    SyntheticDump {
        text,
        entity_count,
        planted,
        deep_decoy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_dump_stream, LineKind};

    #[test]
    fn exact_entity_count_and_corrupt_lines() {
        let d = generate(1000, 3);
        let mut stream = parse_dump_stream(d.text.as_bytes());
        let n = stream.by_ref().filter(|e| e.is_ok()).count();
        assert_eq!(n, 1000);
        assert_eq!(d.entity_count, 1000);
        let stats = stream.stats();
        assert_eq!(stats.corrupt_lines, 3);
        assert_eq!(stats.non_item_lines, 1);
        assert_eq!(d.planted.len(), 12);
    }

    #[test]
    fn every_line_parses_or_is_known_corrupt() {
        let d = generate(200, 0);
        for line in d.text.lines() {
            assert!(!matches!(crate::kb::parse_line(line), LineKind::Corrupt(_)), "{line}");
        }
    }

    #[test]
    fn planted_cover_all_concepts() {
        let d = generate(100, 0);
        let concepts: std::collections::BTreeSet<_> = d.planted.iter().map(|p| p.concept).collect();
        assert_eq!(concepts.len(), 7);
    }
}
