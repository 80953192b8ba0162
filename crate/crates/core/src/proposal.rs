//! Structured agent outputs and the validator's edit application.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::confidence::Confidence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub column: String,
    /// `None` marks the column as explicitly unmapped.
    pub property_iri: Option<String>,
    pub confidence: Confidence,
    #[serde(default)]
    pub rationale: String,
}

/// Output of the mapping agent for one table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingProposal {
    pub table: String,
    pub class_iri: Option<String>,
    pub class_confidence: Confidence,
    pub columns: Vec<ColumnMapping>,
}

impl MappingProposal {
    pub fn column(&self, name: &str) -> Option<&ColumnMapping> {
        self.columns.iter().find(|c| c.column == name)
    }

    /// Every confidence the proposal carries: the class first, then columns.
    pub fn confidences(&self) -> impl Iterator<Item = Confidence> + '_ {
        core::iter::once(self.class_confidence).chain(self.columns.iter().map(|c| c.confidence))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimaryKey {
    pub table: String,
    /// Empty when the table is declared to have no key.
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
    pub confidence: Confidence,
}

impl ForeignKey {
    pub fn endpoints(&self) -> (&str, &str, &str, &str) {
        (&self.from_table, &self.from_column, &self.to_table, &self.to_column)
    }
}

/// Output of the relation agent over all tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationProposal {
    pub primary_keys: Vec<PrimaryKey>,
    pub foreign_keys: Vec<ForeignKey>,
    pub confidence: Confidence,
}

impl RelationProposal {
    pub fn primary_key(&self, table: &str) -> Option<&[String]> {
        self.primary_keys
            .iter()
            .find(|pk| pk.table == table)
            .map(|pk| pk.columns.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditKind {
    Keep,
    Remap,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EditTarget {
    Table {
        table: String,
    },
    Column {
        table: String,
        column: String,
    },
    Fk {
        from_table: String,
        from_column: String,
        to_table: String,
        to_column: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Replacement {
    Iri(String),
    Endpoint { to_table: String, to_column: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub target: EditTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<Replacement>,
    /// Confidence for the edited item; the document-level confidence when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
}

/// Output of the validator agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationEdits {
    pub edits: Vec<Edit>,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("edit {index}: Remap needs a replacement")]
    MissingReplacement { index: usize },
    #[error("edit {index}: {kind:?} must not carry a replacement")]
    UnexpectedReplacement { index: usize, kind: EditKind },
    #[error("edit {index}: replacement does not fit the target")]
    ReplacementMismatch { index: usize },
    #[error("edit {index}: target does not exist: {target}")]
    UnknownTarget { index: usize, target: String },
    #[error("edit {index}: tables cannot be removed, remap them instead")]
    TableRemoval { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditStatus {
    Applied,
    /// A previous edit already targeted the same item.
    IgnoredConflict,
}

/// Audit record of one validator edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditLogEntry {
    pub edit: Edit,
    pub status: EditStatus,
    /// Value of the target before the edit (iri or `to_table.to_column`).
    pub before: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOutcome {
    pub proposals: Vec<MappingProposal>,
    pub relation: RelationProposal,
    pub log: Vec<EditLogEntry>,
    pub warnings: Vec<String>,
}

fn describe(target: &EditTarget) -> String {
    match target {
        EditTarget::Table { table } => format!("table {table}"),
        EditTarget::Column { table, column } => format!("column {table}.{column}"),
        EditTarget::Fk {
            from_table,
            from_column,
            to_table,
            to_column,
        } => format!("fk {from_table}.{from_column} -> {to_table}.{to_column}"),
    }
}

/// Checks one edit's shape: Remap carries a replacement of the right form,
/// Keep and Remove carry none, tables are never removed.
pub fn check_edit_shape(index: usize, edit: &Edit) -> Result<(), EditError> {
    match (edit.kind, &edit.replacement) {
        (EditKind::Remap, None) => Err(EditError::MissingReplacement { index }),
        (EditKind::Remap, Some(r)) => {
            let fits = matches!(
                (&edit.target, r),
                (EditTarget::Fk { .. }, Replacement::Endpoint { .. })
                    | (EditTarget::Table { .. }, Replacement::Iri(_))
                    | (EditTarget::Column { .. }, Replacement::Iri(_))
            );
            if fits {
                Ok(())
            } else {
                Err(EditError::ReplacementMismatch { index })
            }
        }
        (kind, Some(_)) => Err(EditError::UnexpectedReplacement { index, kind }),
        (EditKind::Remove, None) if matches!(edit.target, EditTarget::Table { .. }) => {
            Err(EditError::TableRemoval { index })
        }
        _ => Ok(()),
    }
}

/// Applies validator edits in document order.
///
/// Remap replaces the target's iri or endpoint, Remove unmaps a column or
/// deletes a foreign key, Keep only leaves an audit entry. A second edit on
/// an already edited target is ignored with a warning. The result depends on
/// nothing but the inputs, so replaying the log against the original
/// proposals reproduces the outcome.
pub fn apply_edits(
    proposals: &[MappingProposal],
    relation: &RelationProposal,
    edits: &ValidationEdits,
) -> Result<EditOutcome, EditError> {
    let mut proposals = proposals.to_vec();
    let mut relation = relation.clone();
    let mut seen: BTreeSet<EditTarget> = BTreeSet::new();
    let mut log = Vec::with_capacity(edits.edits.len());
    let mut warnings = Vec::new();

    for (index, edit) in edits.edits.iter().enumerate() {
        check_edit_shape(index, edit)?;
        let unknown = || EditError::UnknownTarget {
            index,
            target: describe(&edit.target),
        };
        let confidence = edit.confidence.unwrap_or(edits.confidence);

        // resolve the target up front so conflicts and unknown targets are
        // reported the same way regardless of kind
        let before = match &edit.target {
            EditTarget::Table { table } => proposals
                .iter()
                .find(|p| &p.table == table)
                .ok_or_else(unknown)?
                .class_iri
                .clone(),
            EditTarget::Column { table, column } => proposals
                .iter()
                .find(|p| &p.table == table)
                .and_then(|p| p.column(column))
                .ok_or_else(unknown)?
                .property_iri
                .clone(),
            EditTarget::Fk {
                from_table,
                from_column,
                to_table,
                to_column,
            } => {
                relation
                    .foreign_keys
                    .iter()
                    .find(|fk| {
                        fk.endpoints()
                            == (
                                from_table.as_str(),
                                from_column.as_str(),
                                to_table.as_str(),
                                to_column.as_str(),
                            )
                    })
                    .ok_or_else(unknown)?;
                Some(format!("{to_table}.{to_column}"))
            }
        };

        if !seen.insert(edit.target.clone()) {
            warnings.push(format!(
                "ConflictingEdit: edit {index} ignored, {} was already edited",
                describe(&edit.target)
            ));
            log.push(EditLogEntry {
                edit: edit.clone(),
                status: EditStatus::IgnoredConflict,
                before,
            });
            continue;
        }

        match (&edit.kind, &edit.target) {
            (EditKind::Keep, _) => {}
            (EditKind::Remap, EditTarget::Table { table }) => {
                let Some(Replacement::Iri(iri)) = &edit.replacement else {
                    unreachable!("shape checked")
                };
                let p = proposals.iter_mut().find(|p| &p.table == table).ok_or_else(unknown)?;
                p.class_iri = Some(iri.clone());
                p.class_confidence = confidence;
            }
            (kind, EditTarget::Column { table, column }) => {
                let col = proposals
                    .iter_mut()
                    .find(|p| &p.table == table)
                    .and_then(|p| p.columns.iter_mut().find(|c| &c.column == column))
                    .ok_or_else(unknown)?;
                col.property_iri = match (kind, &edit.replacement) {
                    (EditKind::Remap, Some(Replacement::Iri(iri))) => Some(iri.clone()),
                    _ => None,
                };
                col.confidence = confidence;
            }
            (
                kind,
                EditTarget::Fk {
                    from_table,
                    from_column,
                    to_table,
                    to_column,
                },
            ) => {
                let pos = relation
                    .foreign_keys
                    .iter()
                    .position(|fk| {
                        fk.endpoints()
                            == (
                                from_table.as_str(),
                                from_column.as_str(),
                                to_table.as_str(),
                                to_column.as_str(),
                            )
                    })
                    .ok_or_else(unknown)?;
                match (kind, &edit.replacement) {
                    (EditKind::Remap, Some(Replacement::Endpoint { to_table, to_column })) => {
                        let fk = &mut relation.foreign_keys[pos];
                        fk.to_table = to_table.clone();
                        fk.to_column = to_column.clone();
                        fk.confidence = confidence;
                    }
                    _ => {
                        relation.foreign_keys.remove(pos);
                    }
                }
            }
            (EditKind::Remove, EditTarget::Table { .. }) => unreachable!("shape checked"),
        }
        log.push(EditLogEntry {
            edit: edit.clone(),
            status: EditStatus::Applied,
            before,
        });
    }

    Ok(EditOutcome {
        proposals,
        relation,
        log,
        warnings,
    })
}
