use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::repository::normalize::tokens;
use crate::repository::{normalize_text, ConceptId, CulturalArtifact};

/// Token sequences of artifact names, indexed by first token.
#[derive(Debug, Clone, Default)]
pub struct NameMatcher {
    by_first: HashMap<String, Vec<Vec<String>>>,
    names: usize,
}

impl NameMatcher {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut m = NameMatcher::default();
        for name in names {
            let seq: Vec<String> = tokens(&normalize_text(name)).map(str::to_string).collect();
            if let Some(first) = seq.first() {
                m.by_first.entry(first.clone()).or_default().push(seq);
                m.names += 1;
            }
        }
        m
    }

    pub fn from_artifacts<'a>(artifacts: impl IntoIterator<Item = &'a CulturalArtifact>) -> Self {
        Self::new(artifacts.into_iter().flat_map(|a| a.surface_names()))
    }

    pub fn is_empty(&self) -> bool {
        self.names == 0
    }

    /// True iff some name occurs in `text` as a whole run of tokens.
    pub fn matches(&self, text: &str) -> bool {
        let normalized = normalize_text(text);
        let toks: Vec<&str> = tokens(&normalized).collect();
        for (i, t) in toks.iter().enumerate() {
            if let Some(seqs) = self.by_first.get(*t) {
                for seq in seqs {
                    if toks.len() - i >= seq.len() && seq.iter().zip(&toks[i..]).all(|(a, b)| a == b) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

pub fn match_artifacts_in_answer(text: &str, artifacts: &[&CulturalArtifact]) -> bool {
    NameMatcher::from_artifacts(artifacts.iter().copied()).matches(text)
}

/// Exact share `hits / total` of answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub hits: u32,
    pub total: u32,
}

impl Fraction {
    pub fn value(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            f64::from(self.hits) / f64::from(self.total)
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.hits, self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub fraction: Fraction,
    /// False when the country has no artifacts for the concept; the fraction
    /// is then reported as zero.
    pub covered: bool,
}

/// Share of `answers` mentioning at least one artifact.
pub fn concept_fraction(answers: &[&str], artifacts: &[&CulturalArtifact]) -> ConceptScore {
    let total = answers.len() as u32;
    let matcher = NameMatcher::from_artifacts(artifacts.iter().copied());
    if matcher.is_empty() {
        return ConceptScore {
            fraction: Fraction { hits: 0, total },
            covered: false,
        };
    }
    let hits = answers.iter().filter(|a| matcher.matches(a)).count() as u32;
    ConceptScore {
        fraction: Fraction { hits, total },
        covered: true,
    }
}

/// Unweighted mean over all seven concepts.
pub fn country_average(fractions: &BTreeMap<ConceptId, f64>) -> Result<f64, AuditError> {
    if let Some(missing) = ConceptId::ALL.iter().find(|c| !fractions.contains_key(c)) {
        return Err(AuditError::MissingConcept(*missing));
    }
    let sum: f64 = ConceptId::ALL.iter().map(|c| fractions[c]).sum();
    Ok(sum / ConceptId::ALL.len() as f64)
}

/// Exact mean of seven rational fractions sharing a denominator, as (num, den).
pub fn exact_average(scores: &BTreeMap<ConceptId, Fraction>) -> Result<(u64, u64), AuditError> {
    if let Some(missing) = ConceptId::ALL.iter().find(|c| !scores.contains_key(c)) {
        return Err(AuditError::MissingConcept(*missing));
    }
    // scale each k/N onto the product of denominators
    let den: u64 = ConceptId::ALL.iter().map(|c| u64::from(scores[c].total.max(1))).product();
    let num: u64 = ConceptId::ALL
        .iter()
        .map(|c| {
            let f = scores[c];
            u64::from(f.hits) * (den / u64::from(f.total.max(1)))
        })
        .sum();
    Ok((num, den * ConceptId::ALL.len() as u64))
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 1e-9).round() / 100.0
}

/// Two-decimal rounding of an exact non-negative rational, half up.
pub fn round2_exact(num: u64, den: u64) -> f64 {
    let hundredths = (200 * u128::from(num) + u128::from(den)) / (2 * u128::from(den));
    hundredths as f64 / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::{CountryCode, Source, Status};
    use proptest::prelude::*;

    fn art(name: &str) -> CulturalArtifact {
        CulturalArtifact::new(name, "ja", CountryCode::new("JP").unwrap(), ConceptId::Cuisine, Source::KnowledgeBase, Status::KbTrusted).unwrap()
    }

    #[test]
    fn token_boundaries() {
        let sushi = art("sushi");
        assert!(match_artifacts_in_answer("Try sushi and ramen tonight.", &[&sushi]));
        let goa = art("Goa");
        assert!(!match_artifacts_in_answer("A goal was scored late.", &[&goa]));
        let feijoada = art("feijoada");
        assert!(match_artifacts_in_answer("FEIJOADA is rich.", &[&feijoada]));
        let multi = art("Día de Muertos");
        assert!(match_artifacts_in_answer("Celebrate dia de muertos!", &[&multi]));
        assert!(!match_artifacts_in_answer("dia de fiesta", &[&multi]));
    }

    #[test]
    fn local_names_match_too() {
        let mut k = art("kimono");
        k.name_local = Some("着物".into());
        assert!(match_artifacts_in_answer("They wore a 着物 today", &[&k]));
    }

    #[test]
    fn fraction_edges() {
        let sushi = art("sushi");
        let none = concept_fraction(&["nothing", "here"], &[&sushi]);
        assert_eq!(none.fraction, Fraction { hits: 0, total: 2 });
        let all = concept_fraction(&["sushi", "more sushi"], &[&sushi]);
        assert_eq!(all.fraction.value(), 1.0);
        let uncovered = concept_fraction(&["sushi"], &[]);
        assert!(!uncovered.covered);
        assert_eq!(uncovered.fraction.hits, 0);
    }

    fn row(v: [f64; 7]) -> BTreeMap<ConceptId, f64> {
        ConceptId::REPORT_ORDER.iter().copied().zip(v).collect()
    }

    #[test]
    fn averages() {
        let india = row([0.16, 0.8, 0.2, 0.64, 0.2, 0.0, 0.32]);
        assert_eq!(round2(country_average(&india).unwrap()), 0.33);
        let armenia = row([0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(round2(country_average(&armenia).unwrap()), 0.03);
        assert_eq!(round2(country_average(&row([0.0; 7])).unwrap()), 0.0);
        let mut partial = india.clone();
        partial.remove(&ConceptId::Landmarks);
        assert!(matches!(country_average(&partial), Err(AuditError::MissingConcept(ConceptId::Landmarks))));
    }

    #[test]
    fn exact_rounding() {
        assert_eq!(round2_exact(1, 8), 0.13);
        assert_eq!(round2_exact(58, 175), 0.33);
        assert_eq!(round2(0.125), 0.13);
    }

    proptest! {
        #[test]
        fn adding_names_never_unmatches(names in prop::collection::vec("[a-c]{1,3}( [a-c]{1,2})?", 0..5), extra in "[a-c]{1,3}", text in "([a-c]{1,3} ){0,8}") {
            let before = NameMatcher::new(names.iter().map(String::as_str)).matches(&text);
            let after = NameMatcher::new(names.iter().map(String::as_str).chain([extra.as_str()])).matches(&text);
            prop_assert!(!before || after);
        }
    }
}
