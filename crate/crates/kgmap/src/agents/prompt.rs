//! Versioned prompt templates and the text blocks filled into them.

use std::fmt::Write;

use kgmap_core::profile::{ColumnProfile, TableProfile};
use kgmap_core::proposal::{MappingProposal, RelationProposal};
use serde_json::Value as Json;

use super::backend::ResponseFormat;
use super::retrieve::{Candidate, CandidateSet};

pub const PROMPT_VERSION: &str = "v1";

pub struct Template {
    pub system: &'static str,
    pub user: &'static str,
}

pub const MAPPING: Template = Template {
    system: include_str!("../../prompts/v1/mapping.system.txt"),
    user: include_str!("../../prompts/v1/mapping.user.txt"),
};

pub const RELATION: Template = Template {
    system: include_str!("../../prompts/v1/relation.system.txt"),
    user: include_str!("../../prompts/v1/relation.user.txt"),
};

pub const VALIDATOR: Template = Template {
    system: include_str!("../../prompts/v1/validator.system.txt"),
    user: include_str!("../../prompts/v1/validator.user.txt"),
};

const MAPPING_SCHEMA: &str = include_str!("../../../../docs/schemas/mapping_proposal.schema.json");
const RELATION_SCHEMA: &str = include_str!("../../../../docs/schemas/relation_proposal.schema.json");
const VALIDATION_SCHEMA: &str = include_str!("../../../../docs/schemas/validation_edits.schema.json");

fn format(name: &'static str, schema: &str) -> ResponseFormat {
    ResponseFormat {
        name,
        schema: serde_json::from_str::<Json>(schema).expect("shipped schema is valid JSON"),
    }
}

pub fn mapping_format() -> ResponseFormat {
    format("MappingProposal", MAPPING_SCHEMA)
}

pub fn relation_format() -> ResponseFormat {
    format("RelationProposal", RELATION_SCHEMA)
}

pub fn validation_format() -> ResponseFormat {
    format("ValidationEdits", VALIDATION_SCHEMA)
}

/// Single-pass `{{key}}` substitution; inserted values are not rescanned.
/// Panics on a placeholder without a value, which is a template bug.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").expect("unterminated placeholder in template");
        let key = &after[..end];
        let value = vars
            .iter()
            .find(|(k, _)| *k == key)
            .unwrap_or_else(|| panic!("template placeholder {key} has no value"))
            .1;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out.trim_end().to_string()
}

fn column_line(c: &ColumnProfile) -> String {
    let s = &c.stats;
    let mut line = format!(
        "- {} (declared {}, inferred {:?}): {} rows, {} null, {} distinct",
        c.name,
        if c.declared_type.is_empty() {
            "untyped"
        } else {
            &c.declared_type
        },
        c.inferred_type,
        s.row_count,
        s.null_count,
        s.distinct_count
    );
    if let (Some(min), Some(max)) = (&s.min, &s.max) {
        let _ = write!(line, ", min {min}, max {max}");
    }
    if let Some(mean) = s.mean {
        let _ = write!(line, ", mean {mean}");
    }
    if let Some(avg) = s.avg_length {
        let _ = write!(line, ", avg length {avg:.1}");
    }
    if !s.top_values.is_empty() {
        let tops: Vec<String> = s
            .top_values
            .iter()
            .map(|t| format!("{} ({})", t.value, t.count))
            .collect();
        let _ = write!(line, ", top values: {}", tops.join(", "));
    }
    if let Some(d) = &c.description {
        let _ = write!(line, "; description: {d}");
    }
    line
}

/// Plain-text table profile: name, description, columns with statistics,
/// and sample rows.
pub fn render_profile(p: &TableProfile) -> String {
    let mut out = format!("Table: {}\nRows: {}\n", p.name, p.row_count);
    if let Some(d) = &p.description {
        let _ = writeln!(out, "Description: {d}");
    }
    out.push_str("Columns:\n");
    for c in &p.columns {
        out.push_str(&column_line(c));
        out.push('\n');
    }
    let _ = writeln!(out, "Sample rows (first {}):", p.sample_rows.len());
    if !p.columns.is_empty() {
        let header: Vec<&str> = p.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(" | "));
    }
    for row in &p.sample_rows {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(" | "));
    }
    out.trim_end().to_string()
}

fn candidate_lines(list: &[Candidate]) -> String {
    if list.is_empty() {
        return "  (none)".into();
    }
    list.iter()
        .enumerate()
        .map(|(i, c)| format!("  {}. {} [{:.4}] {}", i + 1, c.iri, c.score, c.summary))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn mapping_messages(profile: &TableProfile, candidates: &CandidateSet) -> (String, String) {
    let props = candidates
        .property_candidates
        .iter()
        .map(|(col, list)| format!("Column {col}:\n{}", candidate_lines(list)))
        .collect::<Vec<_>>()
        .join("\n");
    let user = fill(
        MAPPING.user,
        &[
            ("profile", &render_profile(profile)),
            ("class_candidates", &candidate_lines(&candidates.class_candidates)),
            (
                "property_candidates",
                if props.is_empty() { "(no columns)" } else { &props },
            ),
            ("table", &profile.name),
        ],
    );
    (MAPPING.system.trim_end().to_string(), user)
}

fn relation_table_block(p: &TableProfile, proposal: Option<&MappingProposal>) -> String {
    let mut out = format!("Table {} ({} rows)", p.name, p.row_count);
    if let Some(class) = proposal.and_then(|m| m.class_iri.as_deref()) {
        let _ = write!(out, ", mapped to {class}");
    }
    out.push('\n');
    for c in &p.columns {
        let prop = proposal
            .and_then(|m| m.column(&c.name))
            .and_then(|m| m.property_iri.as_deref())
            .unwrap_or("unmapped");
        let _ = writeln!(
            out,
            "- {} ({:?}, {} distinct of {} rows, {} null) -> {prop}",
            c.name, c.inferred_type, c.stats.distinct_count, c.stats.row_count, c.stats.null_count
        );
    }
    if !p.declared_primary_key.is_empty() {
        let _ = writeln!(out, "Declared primary key: {}", p.declared_primary_key.join(", "));
    }
    for fk in &p.declared_foreign_keys {
        let _ = writeln!(
            out,
            "Declared foreign key: {} -> {}.{}",
            fk.column, fk.to_table, fk.to_column
        );
    }
    out.trim_end().to_string()
}

pub fn relation_messages(db_id: &str, profiles: &[TableProfile], proposals: &[MappingProposal]) -> (String, String) {
    let tables = profiles
        .iter()
        .map(|p| relation_table_block(p, proposals.iter().find(|m| m.table == p.name)))
        .collect::<Vec<_>>()
        .join("\n\n");
    let user = fill(RELATION.user, &[("db_id", db_id), ("tables", &tables)]);
    (RELATION.system.trim_end().to_string(), user)
}

pub fn validator_messages(
    db_id: &str,
    profiles: &[TableProfile],
    proposals: &[MappingProposal],
    relation: &RelationProposal,
) -> (String, String) {
    let profiles_text = profiles.iter().map(render_profile).collect::<Vec<_>>().join("\n\n");
    let mapping = serde_json::to_string_pretty(proposals).expect("proposals serialize");
    let relation = serde_json::to_string_pretty(relation).expect("relation serializes");
    let user = fill(
        VALIDATOR.user,
        &[
            ("db_id", db_id),
            ("profiles", &profiles_text),
            ("mapping", &mapping),
            ("relation", &relation),
        ],
    );
    (VALIDATOR.system.trim_end().to_string(), user)
}

pub fn correction_message(error: &str) -> String {
    format!("Your previous answer was rejected: {error}\nAnswer again with only the corrected JSON document.")
}
