//! Independent full-scan extraction oracle over raw JSON values.
//!
//! Shares no code with the crate's extractor: it reads the schema TOML and
//! the country table itself and evaluates every rule by brute force.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde_json::Value;

pub const SCHEMAS: &str = include_str!("../../data/schemas.toml");
pub const COUNTRIES: &str = include_str!("../../data/countries.jsonl");

/// (qid, concept, country code)
pub type Hit = (String, String, String);

fn entities(dump: &str) -> Vec<Value> {
    dump.lines()
        .filter_map(|l| {
            let l = l.trim().trim_end_matches(',');
            serde_json::from_str::<Value>(l).ok()
        })
        .filter(|v| v["type"] == "item")
        .collect()
}

fn targets<'a>(e: &'a Value, pid: &str) -> Vec<&'a str> {
    e["claims"][pid]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|s| s["mainsnak"]["datavalue"]["value"]["id"].as_str())
                .collect()
        })
        .unwrap_or_default()
}

fn en_label(e: &Value) -> Option<&str> {
    e["labels"]["en"]["value"].as_str().filter(|s| !s.trim().is_empty())
}

pub fn naive_extract(dump: &str) -> BTreeSet<Hit> {
    let schemas: toml::Value = toml::from_str(SCHEMAS).unwrap();
    let pid = |label: &str| schemas["properties"][label].as_str().unwrap().to_string();
    let pinned = schemas.get("classes").and_then(|c| c.as_table()).cloned().unwrap_or_default();
    let country_of: HashMap<String, String> = COUNTRIES
        .lines()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            Some((v["qid"].as_str()?.to_string(), v["country"].as_str()?.to_string()))
        })
        .collect();

    let all = entities(dump);
    let sub = pid("subclass of");
    let mut by_label: HashMap<String, Vec<String>> = HashMap::new();
    let mut children: HashMap<String, Vec<String>> = HashMap::new();
    for e in &all {
        let q = e["id"].as_str().unwrap().to_string();
        if let Some(l) = en_label(e) {
            by_label.entry(l.trim().to_lowercase()).or_default().push(q.clone());
        }
        for parent in targets(e, &sub) {
            children.entry(parent.to_string()).or_default().push(q.clone());
        }
    }

    let mut out = BTreeSet::new();
    for concept in schemas["concept"].as_array().unwrap() {
        let name = concept["concept"].as_str().unwrap();
        let depth = concept.get("class_closure_depth").and_then(|d| d.as_integer()).unwrap_or(1) as usize;
        let mut closure: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<(String, usize)> = VecDeque::new();
        for label in concept["node_classes"].as_array().unwrap() {
            let label = label.as_str().unwrap();
            let roots: Vec<String> = match pinned.get(label) {
                Some(ids) => ids.as_array().unwrap().iter().map(|i| i.as_str().unwrap().to_string()).collect(),
                None => by_label.get(&label.to_lowercase()).cloned().unwrap_or_default(),
            };
            for r in roots {
                if closure.insert(r.clone()) {
                    queue.push_back((r, 0));
                }
            }
        }
        while let Some((q, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            for c in children.get(&q).into_iter().flatten() {
                if closure.insert(c.clone()) {
                    queue.push_back((c.clone(), d + 1));
                }
            }
        }

        let sport_rule = concept.get("rule").and_then(|r| r.as_str()) == Some("sport_claim");
        let edges: Vec<String> = concept["edge_properties"].as_array().unwrap().iter().map(|p| pid(p.as_str().unwrap())).collect();
        let links: Vec<String> = concept["country_link_properties"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| pid(p.as_str().unwrap()))
            .collect();
        let precedence = concept.get("country_link_precedence").and_then(|b| b.as_bool()).unwrap_or(false);

        for e in &all {
            let matched = if sport_rule {
                let required = pid(concept["required_claim"].as_str().unwrap());
                targets(e, &pid("instance of")).iter().any(|t| closure.contains(*t))
                    && e["claims"][required.as_str()].as_array().is_some_and(|a| !a.is_empty())
            } else {
                edges.iter().any(|p| targets(e, p).iter().any(|t| closure.contains(*t)))
            };
            if !matched || en_label(e).is_none() {
                continue;
            }
            let mut countries: Vec<String> = Vec::new();
            for p in &links {
                for t in targets(e, p) {
                    if let Some(c) = country_of.get(t) {
                        if !countries.contains(c) {
                            countries.push(c.clone());
                        }
                    }
                }
                if precedence && !countries.is_empty() {
                    break;
                }
            }
            let q = e["id"].as_str().unwrap().to_string();
            for c in countries {
                out.insert((q.clone(), name.to_string(), c));
            }
        }
    }
    out
}

/// Planted matches of a synthetic dump in oracle form.
pub fn planted_hits(planted: &[cultura_core::synthetic::PlantedMatch]) -> BTreeSet<Hit> {
    planted
        .iter()
        .map(|p| (p.qid.clone(), p.concept.as_str().to_string(), p.country.to_string()))
        .collect()
}

pub fn extraction_hits(matches: &[cultura_core::kb::ExtractionMatch]) -> BTreeSet<Hit> {
    matches
        .iter()
        .map(|m| (m.qid.clone(), m.concept.as_str().to_string(), m.country.as_str().to_string()))
        .collect()
}

/// Splits a CSV fixture into rows of (key, cells).
pub fn csv_rows(text: &str) -> (Vec<String>, Vec<(String, Vec<String>)>) {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| {
            let mut cells = l.split(',').map(str::to_string);
            let key = cells.next().unwrap();
            (key, cells.collect())
        })
        .collect();
    (header, rows)
}

