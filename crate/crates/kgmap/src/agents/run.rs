//! The mapping, relation and validator agents.

use std::collections::BTreeSet;

use kgmap_core::confidence::Confidence;
use kgmap_core::profile::TableProfile;
use kgmap_core::proposal::{
    apply_edits, check_edit_shape, EditKind, EditOutcome, EditTarget, ForeignKey, MappingProposal, RelationProposal,
    Replacement, ValidationEdits,
};
use kgmap_core::term::{TermKind, THING_IRI};
use kgmap_core::vstore::VectorIndex;
use serde::de::DeserializeOwned;

use super::backend::{ChatBackend, ChatMessage, ResponseFormat};
use super::prompt;
use super::retrieve::CandidateSet;
use crate::error::Error;

pub const DEFAULT_RETRY_BUDGET: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun<T> {
    pub output: T,
    /// Attempts beyond the first.
    pub retry_count: u32,
    pub warnings: Vec<String>,
}

/// Reads a JSON document, tolerating a surrounding Markdown code fence.
pub fn parse_document<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        body = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    serde_json::from_str(body).map_err(|e| format!("not a valid document: {e}"))
}

/// Sends the conversation and checks the answer, appending the rejected
/// answer and a correction message before each retry. `budget` counts all
/// attempts.
fn converse<T>(
    backend: &dyn ChatBackend,
    agent: &'static str,
    (system, user): (String, String),
    format: &ResponseFormat,
    budget: u32,
    mut check: impl FnMut(&str) -> Result<T, String>,
) -> Result<(T, u32), Error> {
    let mut messages = vec![ChatMessage::system(system), ChatMessage::user(user)];
    let mut attempt = 0;
    loop {
        attempt += 1;
        let reply = backend.send(&messages, format)?;
        match check(&reply) {
            Ok(v) => return Ok((v, attempt - 1)),
            Err(e) if attempt >= budget.max(1) => {
                return Err(Error::AgentOutputInvalid {
                    agent,
                    attempts: attempt,
                    last_error: e,
                })
            }
            Err(e) => {
                log::info!("{agent} agent answer rejected (attempt {attempt}): {e}");
                messages.push(ChatMessage::assistant(reply));
                messages.push(ChatMessage::user(prompt::correction_message(&e)));
            }
        }
    }
}

fn check_mapping(
    doc: MappingProposal,
    profile: &TableProfile,
    candidates: &CandidateSet,
) -> Result<MappingProposal, String> {
    if doc.table != profile.name {
        return Err(format!("table must be {:?}, got {:?}", profile.name, doc.table));
    }
    if let Some(class) = &doc.class_iri {
        if class != THING_IRI && !candidates.has_class(class) {
            return Err(format!(
                "class {class} is not among the class candidates; use a listed class or {THING_IRI}"
            ));
        }
    }
    let known: BTreeSet<&str> = profile.columns.iter().map(|c| c.name.as_str()).collect();
    if let Some(extra) = doc.columns.iter().find(|c| !known.contains(c.column.as_str())) {
        return Err(format!(
            "column {:?} does not exist in table {}",
            extra.column, profile.name
        ));
    }
    let mut ordered = Vec::with_capacity(profile.columns.len());
    for col in &profile.columns {
        let mut hits = doc.columns.iter().filter(|c| c.column == col.name);
        match (hits.next(), hits.next()) {
            (Some(m), None) => ordered.push(m.clone()),
            (None, _) => return Err(format!("column {:?} is missing; list every column once", col.name)),
            (Some(_), Some(_)) => return Err(format!("column {:?} is listed more than once", col.name)),
        }
    }
    for m in &ordered {
        if let Some(p) = &m.property_iri {
            if !candidates.has_property(p) {
                return Err(format!(
                    "property {p} for column {:?} is not among the property candidates; use a listed property or null",
                    m.column
                ));
            }
        }
    }
    Ok(MappingProposal {
        columns: ordered,
        ..doc
    })
}

/// Asks for a table's class and column properties. Answers naming terms
/// outside the candidate set are sent back for correction.
pub fn run_mapping_agent(
    backend: &dyn ChatBackend,
    profile: &TableProfile,
    candidates: &CandidateSet,
    budget: u32,
) -> Result<AgentRun<MappingProposal>, Error> {
    let (output, retry_count) = converse(
        backend,
        "mapping",
        prompt::mapping_messages(profile, candidates),
        &prompt::mapping_format(),
        budget,
        |reply| check_mapping(parse_document(reply)?, profile, candidates),
    )?;
    Ok(AgentRun {
        output,
        retry_count,
        warnings: Vec::new(),
    })
}

/// Relation agent output after endpoint validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationOutcome {
    pub relation: RelationProposal,
    /// Edges naming unknown tables or columns, with confidence forced LOW.
    pub dropped: Vec<ForeignKey>,
}

fn check_relation(doc: RelationProposal, profiles: &[TableProfile]) -> Result<(RelationOutcome, Vec<String>), String> {
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    for pk in &doc.primary_keys {
        let Some(p) = profiles.iter().find(|p| p.name == pk.table) else {
            return Err(format!("primary key names unknown table {:?}", pk.table));
        };
        if !seen.insert(pk.table.as_str()) {
            return Err(format!("table {:?} has more than one primary key entry", pk.table));
        }
        if let Some(c) = pk.columns.iter().find(|c| p.column(c).is_none()) {
            return Err(format!("primary key column {}.{c} does not exist", pk.table));
        }
        let distinct: BTreeSet<&String> = pk.columns.iter().collect();
        if distinct.len() != pk.columns.len() {
            return Err(format!("primary key of {} repeats a column", pk.table));
        }
    }
    for p in profiles {
        if !seen.contains(p.name.as_str()) {
            warnings.push(format!(
                "MissingPrimaryKey: {} has no primary key entry; treated as keyless",
                p.name
            ));
        }
    }
    let endpoint_ok = |t: &str, c: &str| profiles.iter().any(|p| p.name == t && p.column(c).is_some());
    let mut kept: Vec<ForeignKey> = Vec::new();
    let mut dropped = Vec::new();
    for fk in doc.foreign_keys {
        let desc = format!(
            "{}.{} -> {}.{}",
            fk.from_table, fk.from_column, fk.to_table, fk.to_column
        );
        if !endpoint_ok(&fk.from_table, &fk.from_column) || !endpoint_ok(&fk.to_table, &fk.to_column) {
            warnings.push(format!("DroppedForeignKey: {desc} names an unknown table or column"));
            dropped.push(ForeignKey {
                confidence: Confidence::Low,
                ..fk
            });
        } else if kept.iter().any(|k| k.endpoints() == fk.endpoints()) {
            warnings.push(format!("DuplicateForeignKey: {desc} listed twice; first kept"));
        } else {
            kept.push(fk);
        }
    }
    Ok((
        RelationOutcome {
            relation: RelationProposal {
                primary_keys: doc.primary_keys,
                foreign_keys: kept,
                confidence: doc.confidence,
            },
            dropped,
        },
        warnings,
    ))
}

/// Asks for primary and foreign keys over all tables.
pub fn run_relation_agent(
    backend: &dyn ChatBackend,
    db_id: &str,
    profiles: &[TableProfile],
    proposals: &[MappingProposal],
    budget: u32,
) -> Result<AgentRun<RelationOutcome>, Error> {
    let ((output, warnings), retry_count) = converse(
        backend,
        "relation",
        prompt::relation_messages(db_id, profiles, proposals),
        &prompt::relation_format(),
        budget,
        |reply| check_relation(parse_document(reply)?, profiles),
    )?;
    Ok(AgentRun {
        output,
        retry_count,
        warnings,
    })
}

fn check_validation(
    doc: ValidationEdits,
    profiles: &[TableProfile],
    proposals: &[MappingProposal],
    relation: &RelationProposal,
    index: &VectorIndex,
) -> Result<(ValidationEdits, EditOutcome), String> {
    for (i, edit) in doc.edits.iter().enumerate() {
        check_edit_shape(i, edit).map_err(|e| e.to_string())?;
        if edit.kind != EditKind::Remap {
            continue;
        }
        let want = match &edit.target {
            EditTarget::Table { .. } => Some(TermKind::Class),
            EditTarget::Column { .. } => Some(TermKind::Property),
            EditTarget::Fk { .. } => None,
        };
        match (want, &edit.replacement) {
            (Some(kind), Some(Replacement::Iri(iri))) => {
                let ok =
                    index.get(iri).is_some_and(|e| e.kind == kind) || (kind == TermKind::Class && iri == THING_IRI);
                if !ok {
                    return Err(format!(
                        "edit {i}: {iri} is not a known Schema.org {}",
                        kind.as_str().to_lowercase()
                    ));
                }
            }
            (None, Some(Replacement::Endpoint { to_table, to_column }))
                if !profiles
                    .iter()
                    .any(|p| &p.name == to_table && p.column(to_column).is_some()) =>
            {
                return Err(format!(
                    "edit {i}: replacement endpoint {to_table}.{to_column} does not exist"
                ));
            }
            _ => {}
        }
    }
    let outcome = apply_edits(proposals, relation, &doc).map_err(|e| e.to_string())?;
    Ok((doc, outcome))
}

/// Asks for review edits and applies them in document order.
pub fn run_validator_agent(
    backend: &dyn ChatBackend,
    db_id: &str,
    profiles: &[TableProfile],
    proposals: &[MappingProposal],
    relation: &RelationProposal,
    index: &VectorIndex,
    budget: u32,
) -> Result<AgentRun<(ValidationEdits, EditOutcome)>, Error> {
    let ((edits, outcome), retry_count) = converse(
        backend,
        "validator",
        prompt::validator_messages(db_id, profiles, proposals, relation),
        &prompt::validation_format(),
        budget,
        |reply| check_validation(parse_document(reply)?, profiles, proposals, relation, index),
    )?;
    let warnings = outcome.warnings.clone();
    Ok(AgentRun {
        output: (edits, outcome),
        retry_count,
        warnings,
    })
}
