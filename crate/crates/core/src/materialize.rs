//! Turns table rows into triples according to a [`SchemaMapping`].
//!
//! Subjects are `<base>/<table>/<key>` where the key is the percent-encoded
//! primary key value, composite parts joined by `_`. Rows without a usable
//! key get the surrogate `row<ordinal>` (1-based, physical order).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mapping::SchemaMapping;
use crate::profile::{is_iso_date, InferredType, Value};
use crate::rdf::{percent_encode, Term, TripleSet, RDF_TYPE, XSD_BOOLEAN, XSD_DATE, XSD_DOUBLE, XSD_INTEGER};

/// All rows of one table, cells in `columns` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TableData {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterializeReport {
    pub triples: u64,
    pub type_triples: u64,
    pub literal_triples: u64,
    pub link_triples: u64,
    /// Foreign key values with no matching target row.
    pub dangling_fks: u64,
    pub surrogate_subjects: u64,
    pub unmapped_columns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaterializeError {
    #[error("no data for mapped table {0}")]
    MissingTable(String),
    #[error("table {table} has no column {column}")]
    MissingColumn { table: String, column: String },
}

/// Typed literal for a cell, following the column's inferred type. Values
/// that do not parse as that type fall back to a plain string.
pub fn literal_for(value: &Value, ty: InferredType) -> Term {
    match ty {
        InferredType::Integer => match value.as_i64() {
            Some(i) => Term::literal(i.to_string(), Some(XSD_INTEGER)),
            None => Term::literal(value.to_string(), None),
        },
        InferredType::Real => match value.as_f64() {
            Some(r) => Term::literal(format!("{r:?}"), Some(XSD_DOUBLE)),
            None => Term::literal(value.to_string(), None),
        },
        InferredType::Boolean => match value.as_bool(true) {
            Some(b) => Term::literal(if b { "true" } else { "false" }, Some(XSD_BOOLEAN)),
            None => Term::literal(value.to_string(), None),
        },
        InferredType::Date => {
            let text = value.to_string();
            let trimmed = text.trim();
            if trimmed.len() == 10 && is_iso_date(trimmed) {
                Term::literal(trimmed, Some(XSD_DATE))
            } else {
                Term::literal(text, None)
            }
        }
        InferredType::Text | InferredType::Unknown => Term::literal(value.to_string(), None),
    }
}

fn column_index(data: &TableData, column: &str) -> Result<usize, MaterializeError> {
    data.columns
        .iter()
        .position(|c| c == column)
        .ok_or_else(|| MaterializeError::MissingColumn {
            table: data.name.clone(),
            column: column.into(),
        })
}

fn subjects(base: &str, data: &TableData, key_cols: &[usize], surrogates: &mut u64) -> Vec<String> {
    let table = percent_encode(&data.name);
    data.rows
        .iter()
        .enumerate()
        .map(|(ordinal, row)| {
            let parts: Option<Vec<String>> = if key_cols.is_empty() {
                None
            } else {
                key_cols
                    .iter()
                    .map(|&i| match &row[i] {
                        Value::Null => None,
                        v => Some(percent_encode(&v.to_string())),
                    })
                    .collect()
            };
            let key = match parts {
                Some(parts) => parts.join("_"),
                None => {
                    *surrogates += 1;
                    format!("row{}", ordinal + 1)
                }
            };
            format!("{base}/{table}/{key}")
        })
        .collect()
}

/// Emits, per row: one `rdf:type` triple, one literal per mapped non-null
/// column, and one link per foreign key whose target row exists.
pub fn materialize(
    tables: &[TableData],
    mapping: &SchemaMapping,
    base_iri: &str,
) -> Result<(TripleSet, MaterializeReport), MaterializeError> {
    let base = base_iri.trim_end_matches('/');
    let mut report = MaterializeReport {
        unmapped_columns: mapping.unmapped_columns() as u64,
        ..Default::default()
    };

    let mut data_of: BTreeMap<&str, &TableData> = BTreeMap::new();
    let mut subjects_of: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for tm in &mapping.tables {
        let data = tables
            .iter()
            .find(|t| t.name == tm.table)
            .ok_or_else(|| MaterializeError::MissingTable(tm.table.clone()))?;
        let key_cols = tm
            .primary_key
            .iter()
            .map(|c| column_index(data, c))
            .collect::<Result<Vec<_>, _>>()?;
        data_of.insert(&tm.table, data);
        subjects_of.insert(
            &tm.table,
            subjects(base, data, &key_cols, &mut report.surrogate_subjects),
        );
    }

    let mut ts = TripleSet::default();
    for tm in &mapping.tables {
        let data = data_of[tm.table.as_str()];
        let subs = &subjects_of[tm.table.as_str()];
        let mapped = tm
            .columns
            .iter()
            .filter_map(|c| c.property_iri.as_ref().map(|p| (c, p)))
            .map(|(c, p)| column_index(data, &c.column).map(|i| (i, p.as_str(), c.inferred_type)))
            .collect::<Result<Vec<_>, _>>()?;
        for (row, subject) in data.rows.iter().zip(subs) {
            ts.push(subject.clone(), RDF_TYPE, Term::iri(tm.class_iri.clone()));
            report.type_triples += 1;
            for &(i, predicate, ty) in &mapped {
                if !row[i].is_null() {
                    ts.push(subject.clone(), predicate, literal_for(&row[i], ty));
                    report.literal_triples += 1;
                }
            }
        }
    }

    for link in &mapping.fk_links {
        let from = data_of
            .get(link.from_table.as_str())
            .ok_or_else(|| MaterializeError::MissingTable(link.from_table.clone()))?;
        let to = data_of
            .get(link.to_table.as_str())
            .ok_or_else(|| MaterializeError::MissingTable(link.to_table.clone()))?;
        let from_i = column_index(from, &link.from_column)?;
        let to_i = column_index(to, &link.to_column)?;
        let to_subjects = &subjects_of[link.to_table.as_str()];
        // first row wins when the target column is not unique
        let mut targets: BTreeMap<String, &str> = BTreeMap::new();
        for (row, subject) in to.rows.iter().zip(to_subjects) {
            if !row[to_i].is_null() {
                targets.entry(row[to_i].to_string()).or_insert(subject);
            }
        }
        let from_subjects = &subjects_of[link.from_table.as_str()];
        for (row, subject) in from.rows.iter().zip(from_subjects) {
            if row[from_i].is_null() {
                continue;
            }
            match targets.get(&row[from_i].to_string()) {
                Some(target) => {
                    ts.push(subject.clone(), &link.predicate, Term::iri(*target));
                    report.link_triples += 1;
                }
                None => report.dangling_fks += 1,
            }
        }
    }

    report.triples = ts.len() as u64;
    Ok((ts, report))
}
