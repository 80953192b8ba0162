//! Vocabulary terms and their one-hop neighbourhoods.
//!
//! A [`Vocabulary`] is an immutable, IRI-keyed collection of [`TermRecord`]s.
//! [`build_subgraph`] collects the immediate neighbours of a term and
//! [`render_subgraph_text`] turns the result into the text that gets embedded.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Namespace of the Schema.org vocabulary (https form).
pub const SCHEMA_NS: &str = "https://schema.org/";
/// Root class used as the fallback mapping target.
pub const THING_IRI: &str = "https://schema.org/Thing";
/// XML Schema datatype namespace.
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";
/// Default cap on `HasProperty` neighbours attached to a class.
pub const DEFAULT_PROPERTY_CAP: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TermKind {
    Class,
    Property,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Class => "Class",
            TermKind::Property => "Property",
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TermStatus {
    Active,
    Superseded,
    Pending,
}

/// One class or property of the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub iri: String,
    pub kind: TermKind,
    pub label: String,
    pub comment: String,
    /// Classes a property applies to. Always empty for classes.
    pub domain_includes: Vec<String>,
    /// Classes or datatypes a property takes as values. Always empty for classes.
    pub range_includes: Vec<String>,
    /// `subClassOf` targets for classes, `subPropertyOf` targets for properties.
    pub super_types: Vec<String>,
    pub status: TermStatus,
    /// Literal datatype such as `Text` or `Date`. Datatypes are leaves: they
    /// are rendered by name and never traversed.
    pub datatype: bool,
}

impl TermRecord {
    pub fn is_active(&self) -> bool {
        self.status == TermStatus::Active
    }
}

/// Last path or fragment segment of an IRI.
pub fn local_name(iri: &str) -> &str {
    let trimmed = iri.trim_end_matches(['/', '#']);
    match trimmed.rfind(['/', '#', ':']) {
        Some(pos) => &trimmed[pos + 1..],
        None => trimmed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("duplicate term iri {0}")]
    DuplicateIri(String),
}

/// Immutable set of terms keyed by IRI.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    terms: BTreeMap<String, TermRecord>,
    // class iri -> properties naming it in domainIncludes, sorted by iri
    properties_by_domain: BTreeMap<String, Vec<String>>,
}

impl Vocabulary {
    pub fn new<I>(records: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = TermRecord>,
    {
        let mut terms = BTreeMap::new();
        for record in records {
            if terms.contains_key(&record.iri) {
                return Err(VocabularyError::DuplicateIri(record.iri));
            }
            terms.insert(record.iri.clone(), record);
        }
        let mut properties_by_domain: BTreeMap<String, Vec<String>> = BTreeMap::new();
        // BTreeMap iteration is already ordered by iri
        for record in terms.values().filter(|t| t.kind == TermKind::Property) {
            let domains: BTreeSet<&String> = record.domain_includes.iter().collect();
            for domain in domains {
                properties_by_domain
                    .entry(domain.clone())
                    .or_default()
                    .push(record.iri.clone());
            }
        }
        Ok(Self {
            terms,
            properties_by_domain,
        })
    }

    pub fn get(&self, iri: &str) -> Option<&TermRecord> {
        self.terms.get(iri)
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.terms.contains_key(iri)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// All records in IRI order.
    pub fn iter(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values()
    }

    /// Records that belong in the retrieval index, in IRI order. Superseded
    /// terms are never indexed; pending terms only when asked for.
    pub fn indexable(&self, include_pending: bool) -> impl Iterator<Item = &TermRecord> {
        self.terms.values().filter(move |t| match t.status {
            TermStatus::Active => true,
            TermStatus::Pending => include_pending,
            TermStatus::Superseded => false,
        })
    }

    pub fn count_status(&self, status: TermStatus) -> usize {
        self.terms.values().filter(|t| t.status == status).count()
    }

    /// Properties whose `domain_includes` names `class_iri`, in IRI order.
    pub fn properties_of(&self, class_iri: &str) -> &[String] {
        self.properties_by_domain
            .get(class_iri)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_datatype(&self, iri: &str) -> bool {
        match self.terms.get(iri) {
            Some(t) => t.datatype,
            None => iri.starts_with(XSD_NS),
        }
    }

    /// True when some range of the property is a non-datatype class, i.e.
    /// the property links to another entity.
    pub fn has_class_range(&self, property_iri: &str) -> bool {
        let Some(prop) = self.terms.get(property_iri) else {
            return false;
        };
        prop.range_includes.iter().any(|r| {
            self.terms
                .get(r)
                .is_some_and(|t| t.kind == TermKind::Class && !t.datatype)
        })
    }

    fn neighbor_label(&self, iri: &str) -> Option<String> {
        match self.terms.get(iri) {
            Some(t) if t.datatype => Some(local_name(iri).into()),
            Some(t) => Some(t.label.clone()),
            None if iri.starts_with(XSD_NS) => Some(local_name(iri).into()),
            None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NeighborRole {
    SuperType,
    DomainOf,
    RangeOf,
    HasProperty,
}

impl NeighborRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NeighborRole::SuperType => "SuperType",
            NeighborRole::DomainOf => "DomainOf",
            NeighborRole::RangeOf => "RangeOf",
            NeighborRole::HasProperty => "HasProperty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Neighbor {
    pub role: NeighborRole,
    pub iri: String,
    pub label: String,
}

/// A term together with its immediate vocabulary neighbours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSubgraph {
    pub root: TermRecord,
    /// Sorted by `(role, iri)`, no duplicates.
    pub neighbors: Vec<Neighbor>,
    pub rendered_text: String,
}

/// Collects the one-hop neighbourhood of `term`.
///
/// Super types always contribute `SuperType` neighbours. Properties add their
/// domain classes (`DomainOf`) and ranges (`RangeOf`); classes add the active
/// properties that list them in `domain_includes` (`HasProperty`), at most
/// `property_cap` of them in IRI order. References that resolve neither to a
/// vocabulary term nor to a datatype are skipped.
pub fn build_subgraph(term: &TermRecord, vocab: &Vocabulary, property_cap: usize) -> TermSubgraph {
    let mut neighbors = Vec::new();
    let mut push = |role: NeighborRole, iri: &str| {
        if let Some(label) = vocab.neighbor_label(iri) {
            neighbors.push(Neighbor {
                role,
                iri: iri.into(),
                label,
            });
        }
    };

    for iri in &term.super_types {
        push(NeighborRole::SuperType, iri);
    }
    match term.kind {
        TermKind::Property => {
            for iri in &term.domain_includes {
                push(NeighborRole::DomainOf, iri);
            }
            for iri in &term.range_includes {
                push(NeighborRole::RangeOf, iri);
            }
        }
        TermKind::Class if !term.datatype => {
            let attached = vocab
                .properties_of(&term.iri)
                .iter()
                .filter(|iri| vocab.get(iri).is_some_and(TermRecord::is_active))
                .take(property_cap);
            for iri in attached {
                push(NeighborRole::HasProperty, iri);
            }
        }
        TermKind::Class => {}
    }

    neighbors.sort_by(|a, b| (a.role, &a.iri).cmp(&(b.role, &b.iri)));
    neighbors.dedup_by(|a, b| a.role == b.role && a.iri == b.iri);

    let mut sg = TermSubgraph {
        root: term.clone(),
        neighbors,
        rendered_text: String::new(),
    };
    sg.rendered_text = render_subgraph_text(&sg);
    sg
}

/// Deterministic text form of a subgraph.
///
/// ```text
/// Movie — Class — A movie.
/// SuperType: CreativeWork
/// HasProperty: actor
/// ```
///
/// Whitespace runs inside the comment collapse to a single space. Neighbour
/// lines follow `(role, iri)` order; there is no trailing newline.
pub fn render_subgraph_text(sg: &TermSubgraph) -> String {
    let mut neighbors: Vec<&Neighbor> = sg.neighbors.iter().collect();
    neighbors.sort_by(|a, b| (a.role, &a.iri).cmp(&(b.role, &b.iri)));

    let mut out = String::new();
    out.push_str(&sg.root.label);
    out.push_str(" — ");
    out.push_str(sg.root.kind.as_str());
    out.push_str(" — ");
    let mut first = true;
    for word in sg.root.comment.split_whitespace() {
        if !first {
            out.push(' ');
        }
        out.push_str(word);
        first = false;
    }
    for n in neighbors {
        out.push('\n');
        out.push_str(n.role.as_str());
        out.push_str(": ");
        out.push_str(&n.label);
    }
    out
}
