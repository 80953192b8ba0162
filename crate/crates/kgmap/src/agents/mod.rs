//! LLM agents: candidate retrieval, the mapping, relation and validator
//! agents, and the pipeline running them over a database.

pub mod backend;
pub mod pipeline;
pub mod prompt;
pub mod retrieve;
pub mod run;
