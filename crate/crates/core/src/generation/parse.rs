//! Extraction of item names from free-form model output.

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedItems {
    pub items: Vec<String>,
    pub expected: usize,
    /// Non-empty output yielded nothing, or the output was empty.
    pub parse_miss: bool,
}

impl ParsedItems {
    pub fn count_mismatch(&self) -> bool {
        self.items.len() != self.expected
    }
}

/// Pulls list items out of numbered, bulleted or line-separated output.
///
/// When any line carries a list marker only marked lines are taken, so
/// preambles and sign-offs drop out. Otherwise each plausible line is an item.
pub fn parse_item_list(raw: &str, expected: usize) -> ParsedItems {
    let lines: Vec<&str> = raw.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let marked: Vec<&str> = lines.iter().filter_map(|l| strip_marker(l)).collect();
    let candidates: Vec<&str> = if !marked.is_empty() {
        marked
    } else if lines.len() == 1 && lines[0].contains(',') && !looks_like_prose(lines[0]) {
        lines[0].split(',').collect()
    } else {
        lines.into_iter().filter(|l| !looks_like_prose(l)).collect()
    };
    let items: Vec<String> = candidates.into_iter().filter_map(clean_item).collect();
    ParsedItems {
        parse_miss: items.is_empty(),
        items,
        expected,
    }
}

fn strip_marker(line: &str) -> Option<&str> {
    for bullet in ["- ", "* ", "• ", "– "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return Some(rest);
        }
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && digits <= 4 {
        let rest = &line[digits..];
        for sep in [". ", ") ", ".) ", ": "] {
            if let Some(item) = rest.strip_prefix(sep) {
                return Some(item);
            }
        }
    }
    None
}

fn looks_like_prose(line: &str) -> bool {
    line.ends_with(':')
        || line.ends_with('!')
        || line.ends_with('?')
        || line.split_whitespace().count() > 8
}

fn clean_item(raw: &str) -> Option<String> {
    let mut s = raw.trim().replace("**", "").replace("__", "");
    // "Dirndl: a dress ..." / "Dirndl - a dress" keep the name only
    for sep in [": ", " - ", " \u{2013} ", " \u{2014} "] {
        if let Some(idx) = s.find(sep) {
            s.truncate(idx);
        }
    }
    let s = s
        .trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '“' | '”' | '‘' | '’' | '*' | '_'))
        .trim_end_matches(['.', ',', ';', ':', '!'])
        .trim();
    (!s.is_empty()).then(|| s.to_string())
}
