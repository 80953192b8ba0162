//! Algorithms for mapping relational schemas onto a vocabulary: term
//! subgraphs, hashing embeddings, exact vector search, table profiling,
//! agent proposal handling, RDF materialization and scoring.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod confidence;
pub mod embed;
pub mod eval;
pub mod mapping;
pub mod materialize;
pub mod profile;
pub mod proposal;
pub mod rdf;
pub mod term;
pub mod vstore;
