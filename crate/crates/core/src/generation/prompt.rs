use crate::repository::ConceptId;

/// Generation prompt template. `{n}` is the per-cycle item count.
pub const PROMPT_TEMPLATE: &str = "List {n} {concept} items that are from {country} and that are not present in {kb_list}. Only list the {concept} names (total {n}) not present in the original list.";

/// Renders a bracketed, comma-separated exclusion list.
pub fn render_exclusion(exclusion: &[String]) -> String {
    format!("[{}]", exclusion.join(", "))
}

pub fn render_prompt(concept: ConceptId, country: &str, exclusion: &[String], items_per_cycle: u32) -> String {
    fill(concept.label(), country, &render_exclusion(exclusion), items_per_cycle)
}

fn fill(concept: &str, country: &str, kb_list: &str, n: u32) -> String {
    PROMPT_TEMPLATE
        .replace("{n}", &n.to_string())
        .replace("{concept}", concept)
        .replace("{country}", country)
        .replace("{kb_list}", kb_list)
}
