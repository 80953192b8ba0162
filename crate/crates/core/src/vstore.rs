//! Exact in-memory vector index over term subgraphs.
//!
//! Entries live in two per-kind partitions so that kind-filtered queries only
//! scan the relevant half. Retrieval is an exhaustive cosine scan ranked by
//! `(score desc, iri asc)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::embed::{cosine_with_norms, norm, EmbeddingVector};
use crate::term::TermKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("dimension mismatch: index has {index} dims, got {got}")]
    DimensionMismatch { index: usize, got: usize },
    #[error("duplicate iri {0}")]
    DuplicateIri(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub iri: String,
    pub kind: TermKind,
    pub vector: EmbeddingVector,
    pub rendered_text: String,
}

#[derive(Debug, Clone)]
struct Stored {
    entry: IndexEntry,
    norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<'a> {
    pub entry: &'a IndexEntry,
    pub score: f64,
}

impl Hit<'_> {
    pub fn iri(&self) -> &str {
        &self.entry.iri
    }
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    dims: usize,
    fingerprint: String,
    classes: Vec<Stored>,
    properties: Vec<Stored>,
    by_iri: BTreeMap<String, (TermKind, usize)>,
}

impl VectorIndex {
    pub fn new(dims: usize, fingerprint: impl Into<String>) -> Self {
        Self {
            dims,
            fingerprint: fingerprint.into(),
            classes: Vec::new(),
            properties: Vec::new(),
            by_iri: BTreeMap::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Embedder identity (backend, dimensionality, scheme) that produced
    /// every vector in the index.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.classes.len() + self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&mut self, entry: IndexEntry) -> Result<(), IndexError> {
        if entry.vector.dims() != self.dims {
            return Err(IndexError::DimensionMismatch {
                index: self.dims,
                got: entry.vector.dims(),
            });
        }
        if self.by_iri.contains_key(&entry.iri) {
            return Err(IndexError::DuplicateIri(entry.iri));
        }
        let partition = match entry.kind {
            TermKind::Class => &mut self.classes,
            TermKind::Property => &mut self.properties,
        };
        self.by_iri.insert(entry.iri.clone(), (entry.kind, partition.len()));
        let norm = norm(entry.vector.values());
        partition.push(Stored { entry, norm });
        Ok(())
    }

    pub fn get(&self, iri: &str) -> Option<&IndexEntry> {
        let &(kind, pos) = self.by_iri.get(iri)?;
        Some(&self.partition(kind)[pos].entry)
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.by_iri.contains_key(iri)
    }

    /// Classes first, then properties, each in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = &IndexEntry> {
        self.classes.iter().chain(self.properties.iter()).map(|s| &s.entry)
    }

    fn partition(&self, kind: TermKind) -> &[Stored] {
        match kind {
            TermKind::Class => &self.classes,
            TermKind::Property => &self.properties,
        }
    }

    /// The `k` entries most similar to `query`, optionally restricted to one
    /// kind. Returns fewer than `k` hits when the (filtered) index is smaller
    /// and nothing for `k == 0`.
    pub fn top_k(
        &self,
        query: &EmbeddingVector,
        k: usize,
        filter: Option<TermKind>,
    ) -> Result<Vec<Hit<'_>>, IndexError> {
        if query.dims() != self.dims {
            return Err(IndexError::DimensionMismatch {
                index: self.dims,
                got: query.dims(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let qn = norm(query.values());
        let candidates: &mut dyn Iterator<Item = &Stored> = match filter {
            Some(kind) => &mut self.partition(kind).iter(),
            None => &mut self.classes.iter().chain(self.properties.iter()),
        };
        let mut hits: Vec<Hit<'_>> = candidates
            .map(|s| Hit {
                entry: &s.entry,
                score: cosine_with_norms(query.values(), qn, s.entry.vector.values(), s.norm),
            })
            .collect();

        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, rank_order);
            hits.truncate(k);
        }
        hits.sort_unstable_by(rank_order);
        Ok(hits)
    }
}

fn rank_order(a: &Hit<'_>, b: &Hit<'_>) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.entry.iri.cmp(&b.entry.iri))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn entry(iri: &str, kind: TermKind, xs: &[f32]) -> IndexEntry {
        IndexEntry {
            iri: iri.to_string(),
            kind,
            vector: EmbeddingVector::from_values(xs.to_vec()),
            rendered_text: iri.to_string(),
        }
    }

    fn q(xs: &[f32]) -> EmbeddingVector {
        EmbeddingVector::from_values(xs.to_vec())
    }

    #[test]
    fn empty_index_returns_nothing() {
        let idx = VectorIndex::new(2, "fp");
        assert!(idx.top_k(&q(&[1.0, 0.0]), 5, None).unwrap().is_empty());
    }

    #[test]
    fn rejects_mismatched_dims_and_duplicates() {
        let mut idx = VectorIndex::new(2, "fp");
        assert_eq!(
            idx.insert(entry("a", TermKind::Class, &[1.0])),
            Err(IndexError::DimensionMismatch { index: 2, got: 1 })
        );
        idx.insert(entry("a", TermKind::Class, &[1.0, 0.0])).unwrap();
        assert_eq!(
            idx.insert(entry("a", TermKind::Property, &[1.0, 0.0])),
            Err(IndexError::DuplicateIri("a".into()))
        );
        assert!(matches!(
            idx.top_k(&q(&[1.0, 0.0, 0.0]), 1, None),
            Err(IndexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ties_break_by_iri_and_k_larger_than_index() {
        let mut idx = VectorIndex::new(3, "fp");
        // cosines against (1,2,2): c -> 8/9, b and a -> 1
        idx.insert(entry("c", TermKind::Class, &[2.0, 1.0, 2.0])).unwrap();
        idx.insert(entry("b", TermKind::Class, &[1.0, 2.0, 2.0])).unwrap();
        idx.insert(entry("a", TermKind::Class, &[2.0, 4.0, 4.0])).unwrap();
        let hits = idx.top_k(&q(&[1.0, 2.0, 2.0]), 10, None).unwrap();
        let iris: Vec<_> = hits.iter().map(|h| h.iri()).collect();
        assert_eq!(iris, vec!["a", "b", "c"]);
        assert!((hits[2].score - 8.0 / 9.0).abs() < 1e-12);
        let top1 = idx.top_k(&q(&[1.0, 2.0, 2.0]), 1, None).unwrap();
        assert_eq!(top1[0].iri(), "a");
    }

    #[test]
    fn filter_by_kind() {
        let mut idx = VectorIndex::new(2, "fp");
        idx.insert(entry("cls", TermKind::Class, &[1.0, 0.0])).unwrap();
        idx.insert(entry("prop", TermKind::Property, &[1.0, 0.0])).unwrap();
        let hits = idx.top_k(&q(&[1.0, 0.0]), 5, Some(TermKind::Property)).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].iri(), "prop");
        assert_eq!(idx.get("cls").unwrap().kind, TermKind::Class);
        assert_eq!(idx.entries().count(), 2);
    }

    #[test]
    fn zero_k_is_empty() {
        let mut idx = VectorIndex::new(2, "fp");
        idx.insert(entry("a", TermKind::Class, &[1.0, 0.0])).unwrap();
        assert!(idx.top_k(&q(&[1.0, 0.0]), 0, None).unwrap().is_empty());
    }
}
