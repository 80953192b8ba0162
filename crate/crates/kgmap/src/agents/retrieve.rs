//! Candidate terms for a table and its columns.

use kgmap_core::profile::{ColumnProfile, TableProfile};
use kgmap_core::term::TermKind;
use kgmap_core::vstore::VectorIndex;
use serde::Serialize;

use crate::embedder::Embedder;
use crate::error::Error;

pub const DEFAULT_K_CLASS: usize = 10;
pub const DEFAULT_K_PROP: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub iri: String,
    pub score: f64,
    /// First line of the term's rendered text: label, kind and comment.
    pub summary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CandidateSet {
    pub class_candidates: Vec<Candidate>,
    /// One ranked list per column, in column order.
    pub property_candidates: Vec<(String, Vec<Candidate>)>,
}

impl CandidateSet {
    pub fn for_column(&self, column: &str) -> &[Candidate] {
        self.property_candidates
            .iter()
            .find(|(c, _)| c == column)
            .map_or(&[], |(_, list)| list.as_slice())
    }

    pub fn has_class(&self, iri: &str) -> bool {
        self.class_candidates.iter().any(|c| c.iri == iri)
    }

    pub fn has_property(&self, iri: &str) -> bool {
        self.property_candidates
            .iter()
            .any(|(_, list)| list.iter().any(|c| c.iri == iri))
    }
}

pub fn table_query_text(p: &TableProfile) -> String {
    let columns: Vec<&str> = p.columns.iter().map(|c| c.name.as_str()).collect();
    format!(
        "{}\n{}\n{}",
        p.name,
        columns.join(" "),
        p.description.as_deref().unwrap_or("")
    )
}

pub fn column_query_text(c: &ColumnProfile) -> String {
    let tops: Vec<String> = c.stats.top_values.iter().map(|t| t.value.to_string()).collect();
    format!(
        "{} {:?}\n{}\n{}",
        c.name,
        c.inferred_type,
        tops.join(" "),
        c.description.as_deref().unwrap_or("")
    )
}

fn search(
    index: &VectorIndex,
    embedder: &Embedder,
    text: &str,
    k: usize,
    kind: TermKind,
) -> Result<Vec<Candidate>, Error> {
    let query = embedder.embed(text)?;
    let hits = index
        .top_k(&query, k, Some(kind))
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Ok(hits
        .into_iter()
        .map(|h| Candidate {
            iri: h.entry.iri.clone(),
            score: h.score,
            summary: h.entry.rendered_text.lines().next().unwrap_or("").to_string(),
        })
        .collect())
}

pub fn retrieve_candidates(
    profile: &TableProfile,
    index: &VectorIndex,
    embedder: &Embedder,
    k_class: usize,
    k_prop: usize,
) -> Result<CandidateSet, Error> {
    let class_candidates = search(index, embedder, &table_query_text(profile), k_class, TermKind::Class)?;
    let property_candidates = profile
        .columns
        .iter()
        .map(|c| {
            Ok((
                c.name.clone(),
                search(index, embedder, &column_query_text(c), k_prop, TermKind::Property)?,
            ))
        })
        .collect::<Result<_, Error>>()?;
    Ok(CandidateSet {
        class_candidates,
        property_candidates,
    })
}
