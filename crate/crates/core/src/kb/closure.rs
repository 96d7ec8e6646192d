use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::dump::WikidataEntity;
use crate::repository::normalize_text;

/// Pass-one index: class labels of interest and the subclass graph.
#[derive(Debug, Clone, Default)]
pub struct ClassIndex {
    wanted: HashSet<String>,
    labels: HashMap<String, BTreeSet<String>>,
    /// parent class -> direct subclasses
    children: HashMap<String, Vec<String>>,
    subclass_property: String,
}

impl ClassIndex {
    /// `wanted_labels` are the class labels whose items must be remembered.
    pub fn new<'a>(wanted_labels: impl IntoIterator<Item = &'a str>, subclass_property: &str) -> Self {
        ClassIndex {
            wanted: wanted_labels.into_iter().map(normalize_text).collect(),
            labels: HashMap::new(),
            children: HashMap::new(),
            subclass_property: subclass_property.to_string(),
        }
    }

    pub fn observe(&mut self, e: &WikidataEntity) {
        if let Some(label) = e.label("en") {
            let key = normalize_text(label);
            if self.wanted.contains(&key) {
                self.labels.entry(key).or_default().insert(e.qid.clone());
            }
        }
        for parent in e.entity_claims(&self.subclass_property) {
            self.children.entry(parent.to_string()).or_default().push(e.qid.clone());
        }
    }

    /// Folds another partial index built from a later part of the dump.
    pub fn merge(&mut self, other: ClassIndex) {
        for (k, v) in other.labels {
            self.labels.entry(k).or_default().extend(v);
        }
        for (k, mut v) in other.children {
            self.children.entry(k).or_default().append(&mut v);
        }
    }

    /// Returns an empty index with the same configuration.
    pub fn fresh(&self) -> Self {
        ClassIndex {
            wanted: self.wanted.clone(),
            labels: HashMap::new(),
            children: HashMap::new(),
            subclass_property: self.subclass_property.clone(),
        }
    }

    pub fn resolve_label(&self, label: &str) -> Option<&BTreeSet<String>> {
        self.labels.get(&normalize_text(label))
    }

    pub fn subclasses(&self, class: &str) -> &[String] {
        self.children.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge_count(&self) -> usize {
        self.children.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Closure {
    pub classes: BTreeSet<String>,
    pub unknown_labels: Vec<String>,
}

/// QIDs of the named classes plus everything within `depth` subclass hops below them.
pub fn build_class_closure(
    index: &ClassIndex,
    pinned: &BTreeMap<String, Vec<String>>,
    node_classes: &[String],
    depth: u32,
) -> Closure {
    let mut closure = Closure::default();
    let mut frontier: VecDeque<(String, u32)> = VecDeque::new();
    for label in node_classes {
        let roots: Vec<String> = match pinned.get(label) {
            Some(ids) => ids.clone(),
            None => match index.resolve_label(label) {
                Some(ids) => ids.iter().cloned().collect(),
                None => {
                    log::warn!("class label {label:?} not found in dump; ignored");
                    closure.unknown_labels.push(label.clone());
                    continue;
                }
            },
        };
        for qid in roots {
            if closure.classes.insert(qid.clone()) {
                frontier.push_back((qid, 0));
            }
        }
    }
    while let Some((qid, d)) = frontier.pop_front() {
        if d >= depth {
            continue;
        }
        for child in index.subclasses(&qid) {
            if closure.classes.insert(child.clone()) {
                frontier.push_back((child.clone(), d + 1));
            }
        }
    }
    closure
}
