//! Schema.org mapping pipeline: vocabulary parsing, the term index, database
//! introspection, LLM agents, knowledge graph output and evaluation.

pub mod agents;
pub mod cli;
pub mod config;
pub mod embedder;
pub mod error;
pub mod gold;
pub mod index;
pub mod ingest;
pub mod kg;
pub mod vocab;

pub use error::Error;
