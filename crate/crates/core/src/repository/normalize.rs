//! Name normalization shared by deduplication, exclusion lists and answer matching.
//!
//! Pipeline: NFKC, full case folding, removal of combining diacritical marks,
//! punctuation and symbols to spaces, whitespace collapse. Non-Latin marks that
//! carry meaning (Devanagari vowel signs, kana voicing marks) are kept.

use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("name {raw:?} is empty after normalization")]
pub struct DegenerateName {
    pub raw: String,
}

/// Normalizes a name, failing when nothing is left.
pub fn normalize_name(raw: &str) -> Result<String, DegenerateName> {
    let out = normalize_text(raw);
    if out.is_empty() {
        return Err(DegenerateName { raw: raw.to_string() });
    }
    Ok(out)
}

/// Infallible variant used for free text (model answers). May return "".
pub fn normalize_text(raw: &str) -> String {
    // A single pass is not always a fixed point: case folding can emit
    // sequences that NFKC recomposes differently. Re-running converges fast.
    let mut current = normalize_once(raw);
    for _ in 0..4 {
        let next = normalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn normalize_once(raw: &str) -> String {
    let folded = caseless::default_case_fold_str(&raw.nfkc().collect::<String>());
    let stripped: String = folded
        .nfd()
        .filter(|c| !is_diacritic_mark(*c))
        .nfc()
        .collect();

    let mut out = String::with_capacity(stripped.len());
    let mut pending_space = false;
    for c in stripped.chars() {
        if is_separator(c) {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

/// Combining marks from the diacritic blocks used by Latin, Greek and Cyrillic.
fn is_diacritic_mark(c: char) -> bool {
    matches!(c,
        '\u{0300}'..='\u{036F}'
        | '\u{1AB0}'..='\u{1AFF}'
        | '\u{1DC0}'..='\u{1DFF}'
        | '\u{20D0}'..='\u{20FF}'
        | '\u{FE20}'..='\u{FE2F}')
}

fn is_separator(c: char) -> bool {
    use GeneralCategory::*;
    match get_general_category(c) {
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter
        | NonspacingMark | SpacingMark | EnclosingMark | DecimalNumber | LetterNumber
        | OtherNumber => false,
        // punctuation, symbols, separators, controls, format, unassigned
        _ => true,
    }
}

/// Splits normalized text into tokens.
pub fn tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized.split(' ').filter(|t| !t.is_empty())
}
