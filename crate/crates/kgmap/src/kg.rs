//! Output files for a database: `<db_id>.mapping`, `<db_id>.nt`,
//! `<db_id>.report`, and the non-deterministic `<db_id>.timing`.

use std::path::{Path, PathBuf};

use kgmap_core::confidence::Confidence;
use kgmap_core::mapping::SchemaMapping;
use kgmap_core::materialize::{materialize, MaterializeReport};
use kgmap_core::proposal::{MappingProposal, RelationProposal, ValidationEdits};
use kgmap_core::rdf::{serialize_ntriples, TripleSet};
use serde::{Deserialize, Serialize};

use crate::agents::pipeline::{MapOutcome, Timing};
use crate::agents::prompt::PROMPT_VERSION;
use crate::error::Error;
use crate::ingest::Database;

pub const MAPPING_FORMAT: &str = "kgmap-mapping/1";
pub const NOT_APPLICABLE: &str = "NOT_APPLICABLE";
pub const DEFAULT_BASE_IRI: &str = "http://example.org/kg/";

/// Everything a mapping run decided, in a stable textual form. Two runs on
/// the same inputs with the replay backend write identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingDocument {
    pub format: String,
    pub db_id: String,
    pub prompt_version: String,
    pub index_fingerprint: String,
    /// `HIGH`, `MEDIUM`, `LOW`, or `NOT_APPLICABLE` for a database without tables.
    pub final_confidence: String,
    pub proposals: Vec<MappingProposal>,
    pub relation: RelationProposal,
    pub edits: ValidationEdits,
    pub mapping: SchemaMapping,
}

pub fn confidence_label(c: Option<Confidence>) -> String {
    c.map_or_else(|| NOT_APPLICABLE.to_string(), |c| c.as_str().to_string())
}

impl MappingDocument {
    pub fn from_outcome(outcome: &MapOutcome, index_fingerprint: &str) -> Self {
        Self {
            format: MAPPING_FORMAT.into(),
            db_id: outcome.db_id.clone(),
            prompt_version: PROMPT_VERSION.into(),
            index_fingerprint: index_fingerprint.into(),
            final_confidence: confidence_label(outcome.mapping.final_confidence),
            proposals: outcome.proposals.clone(),
            relation: outcome.relation.clone(),
            edits: outcome.edits.clone(),
            mapping: outcome.mapping.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("mapping document serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::MalformedMapping(e.to_string()))?;
        if doc.format != MAPPING_FORMAT {
            return Err(Error::MalformedMapping(format!(
                "format {} is not {MAPPING_FORMAT}",
                doc.format
            )));
        }
        Ok(doc)
    }
}

pub fn output_path(out_dir: &Path, db_id: &str, ext: &str) -> PathBuf {
    out_dir.join(format!("{db_id}.{ext}"))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_mapping(doc: &MappingDocument, out_dir: &Path) -> Result<PathBuf, Error> {
    let path = output_path(out_dir, &doc.db_id, "mapping");
    write(&path, &doc.to_text())?;
    Ok(path)
}

pub fn read_mapping(out_dir: &Path, db_id: &str) -> Result<MappingDocument, Error> {
    let path = output_path(out_dir, db_id, "mapping");
    if !path.is_file() {
        return Err(Error::MappingNotFound(format!(
            "{} does not exist; run `kgmap map` first",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    MappingDocument::parse(&text)
}

pub fn write_timing(timing: &Timing, out_dir: &Path, db_id: &str) -> Result<PathBuf, Error> {
    let path = output_path(out_dir, db_id, "timing");
    let mut text = serde_json::to_string_pretty(timing).expect("timing serializes");
    text.push('\n');
    write(&path, &text)?;
    Ok(path)
}

pub fn read_timing(out_dir: &Path, db_id: &str) -> Option<Timing> {
    let text = std::fs::read_to_string(output_path(out_dir, db_id, "timing")).ok()?;
    serde_json::from_str(&text).ok()
}

/// Counts written next to the mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub db_id: String,
    pub tables: u64,
    pub columns: u64,
    pub mapped_columns: u64,
    pub unmapped_columns: u64,
    pub fk_links: u64,
    pub final_confidence: String,
    pub retries: u64,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub materialized: Option<MaterializeReport>,
}

impl RunReport {
    pub fn new(mapping: &SchemaMapping, materialized: Option<MaterializeReport>) -> Self {
        let columns = mapping.column_count() as u64;
        let unmapped = mapping.unmapped_columns() as u64;
        Self {
            db_id: mapping.db_id.clone(),
            tables: mapping.tables.len() as u64,
            columns,
            mapped_columns: columns - unmapped,
            unmapped_columns: unmapped,
            fk_links: mapping.fk_links.len() as u64,
            final_confidence: confidence_label(mapping.final_confidence),
            retries: mapping.provenance.retries.values().map(|&r| u64::from(r)).sum(),
            warnings: mapping.provenance.warnings.clone(),
            materialized,
        }
    }
}

pub fn write_report(report: &RunReport, out_dir: &Path) -> Result<PathBuf, Error> {
    let path = output_path(out_dir, &report.db_id, "report");
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write(&path, &text)?;
    Ok(path)
}

/// Reads every mapped table and turns its rows into triples.
pub fn materialize_database(
    db: &Database,
    mapping: &SchemaMapping,
    base_iri: &str,
) -> Result<(TripleSet, MaterializeReport), Error> {
    let tables = mapping
        .tables
        .iter()
        .map(|t| db.read_table(&t.table))
        .collect::<Result<Vec<_>, _>>()?;
    materialize(&tables, mapping, base_iri).map_err(|e| Error::MaterializeFailed(e.to_string()))
}

pub fn write_ntriples(triples: &TripleSet, out_dir: &Path, db_id: &str) -> Result<PathBuf, Error> {
    let path = output_path(out_dir, db_id, "nt");
    write(&path, &serialize_ntriples(triples))?;
    Ok(path)
}
