//! Streaming reader for the one-entity-per-line Wikidata JSON dump.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use super::KbError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimValue {
    Entity(String),
    Text(String),
    Other,
}

impl ClaimValue {
    pub fn entity(&self) -> Option<&str> {
        match self {
            ClaimValue::Entity(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WikidataEntity {
    pub qid: String,
    pub labels: BTreeMap<String, String>,
    pub claims: BTreeMap<String, Vec<ClaimValue>>,
}

impl WikidataEntity {
    pub fn label(&self, lang: &str) -> Option<&str> {
        self.labels.get(lang).map(String::as_str).filter(|l| !l.trim().is_empty())
    }

    pub fn entity_claims<'a>(&'a self, property: &str) -> impl Iterator<Item = &'a str> + 'a {
        self.claims
            .get(property)
            .into_iter()
            .flatten()
            .filter_map(ClaimValue::entity)
    }

    pub fn has_claim(&self, property: &str) -> bool {
        self.claims.get(property).is_some_and(|v| !v.is_empty())
    }
}

pub fn is_item_id(id: &str) -> bool {
    id.len() > 1 && id.starts_with('Q') && id[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Outcome of reading one dump line.
#[derive(Debug)]
pub enum LineKind {
    Entity(WikidataEntity),
    /// Array brackets and blank lines.
    Structural,
    /// Valid JSON for a non-item entity (property, lexeme).
    NonItem,
    Corrupt(String),
}

pub fn parse_line(line: &str) -> LineKind {
    let trimmed = line.trim();
    let trimmed = trimmed.strip_suffix(',').unwrap_or(trimmed).trim_end();
    if trimmed.is_empty() || trimmed == "[" || trimmed == "]" {
        return LineKind::Structural;
    }
    match serde_json::from_str::<RawEntity>(trimmed) {
        Ok(raw) if is_item_id(&raw.id) => LineKind::Entity(raw.into_entity()),
        Ok(_) => LineKind::NonItem,
        Err(e) => LineKind::Corrupt(e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct DumpStats {
    pub lines: u64,
    pub entities: u64,
    pub corrupt_lines: u64,
    pub non_item_lines: u64,
}

impl DumpStats {
    pub fn absorb(&mut self, other: &DumpStats) {
        self.lines += other.lines;
        self.entities += other.entities;
        self.corrupt_lines += other.corrupt_lines;
        self.non_item_lines += other.non_item_lines;
    }

    pub(crate) fn record(&mut self, kind: &LineKind, line_no: u64) {
        self.lines += 1;
        match kind {
            LineKind::Entity(_) => self.entities += 1,
            LineKind::NonItem => self.non_item_lines += 1,
            LineKind::Corrupt(msg) => {
                log::warn!("dump line {line_no}: skipped unparseable entity: {msg}");
                self.corrupt_lines += 1;
            }
            LineKind::Structural => {}
        }
    }
}

/// Iterator over the entities of a dump, in file order.
pub struct DumpStream<R> {
    reader: R,
    buf: String,
    line_no: u64,
    stats: DumpStats,
}

pub fn parse_dump_stream<R: BufRead>(reader: R) -> DumpStream<R> {
    DumpStream {
        reader,
        buf: String::new(),
        line_no: 0,
        stats: DumpStats::default(),
    }
}

impl<R> DumpStream<R> {
    pub fn stats(&self) -> DumpStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for DumpStream<R> {
    type Item = Result<WikidataEntity, KbError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    return Some(Err(KbError::DumpRead {
                        line: self.line_no + 1,
                        source: e,
                    }))
                }
            }
            self.line_no += 1;
            let kind = parse_line(&self.buf);
            self.stats.record(&kind, self.line_no);
            if let LineKind::Entity(e) = kind {
                return Some(Ok(e));
            }
        }
    }
}

/// Reads up to `max` lines into `chunk`, returning the number read.
pub(crate) fn read_chunk<R: BufRead>(
    reader: &mut R,
    chunk: &mut Vec<String>,
    max: usize,
    first_line: u64,
) -> Result<usize, KbError> {
    chunk.clear();
    while chunk.len() < max {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => chunk.push(line),
            Err(e) => {
                return Err(KbError::DumpRead {
                    line: first_line + chunk.len() as u64,
                    source: e,
                })
            }
        }
    }
    Ok(chunk.len())
}

#[derive(Deserialize)]
struct RawEntity {
    id: String,
    #[serde(default, deserialize_with = "map_or_empty_seq")]
    labels: HashMap<String, RawLabel>,
    #[serde(default, deserialize_with = "map_or_empty_seq")]
    claims: HashMap<String, Vec<RawStatement>>,
}

#[derive(Deserialize)]
struct RawLabel {
    value: String,
}

#[derive(Deserialize)]
struct RawStatement {
    mainsnak: RawSnak,
}

#[derive(Deserialize)]
struct RawSnak {
    #[serde(default)]
    datavalue: Option<RawDataValue>,
}

#[derive(Deserialize)]
struct RawDataValue {
    value: serde_json::Value,
    #[serde(rename = "type")]
    kind: String,
}

impl RawEntity {
    fn into_entity(self) -> WikidataEntity {
        let labels = self.labels.into_iter().map(|(k, v)| (k, v.value)).collect();
        let claims = self
            .claims
            .into_iter()
            .map(|(prop, statements)| {
                let values = statements.into_iter().map(|s| s.mainsnak.into_value()).collect();
                (prop, values)
            })
            .collect();
        WikidataEntity {
            qid: self.id,
            labels,
            claims,
        }
    }
}

impl RawSnak {
    fn into_value(self) -> ClaimValue {
        let Some(dv) = self.datavalue else {
            return ClaimValue::Other;
        };
        match (dv.kind.as_str(), dv.value) {
            ("wikibase-entityid", serde_json::Value::Object(obj)) => match obj.get("id").and_then(|v| v.as_str()) {
                Some(id) => ClaimValue::Entity(id.to_string()),
                None => match obj.get("numeric-id").and_then(|v| v.as_u64()) {
                    Some(n) => ClaimValue::Entity(format!("Q{n}")),
                    None => ClaimValue::Other,
                },
            },
            ("string", serde_json::Value::String(s)) => ClaimValue::Text(s),
            _ => ClaimValue::Other,
        }
    }
}

/// Empty maps are serialized as `[]` in the dump.
fn map_or_empty_seq<'de, D, V>(deserializer: D) -> Result<HashMap<String, V>, D::Error>
where
    D: Deserializer<'de>,
    V: Deserialize<'de>,
{
    struct MapOrSeq<V>(std::marker::PhantomData<V>);

    impl<'de, V: Deserialize<'de>> Visitor<'de> for MapOrSeq<V> {
        type Value = HashMap<String, V>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map or an empty array")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = HashMap::with_capacity(access.size_hint().unwrap_or(0));
            while let Some((k, v)) = access.next_entry()? {
                out.insert(k, v);
            }
            Ok(out)
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
            if seq.next_element::<de::IgnoredAny>()?.is_some() {
                return Err(de::Error::custom("expected an empty array"));
            }
            Ok(HashMap::new())
        }
    }

    deserializer.deserialize_any(MapOrSeq(std::marker::PhantomData))
}
