//! Gold mapping files (`<gold_dir>/<db_id>.gold`) and scoring.

use std::path::{Path, PathBuf};

use kgmap_core::eval::{compare, EvalReport, GoldMapping, TimingRow};

use crate::agents::pipeline::Timing;
use crate::error::Error;
use crate::kg::MappingDocument;

pub fn gold_path(gold_dir: &Path, db_id: &str) -> PathBuf {
    gold_dir.join(format!("{db_id}.gold"))
}

pub fn load_gold(gold_dir: &Path, db_id: &str) -> Result<GoldMapping, Error> {
    let path = gold_path(gold_dir, db_id);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::GoldNotFound(format!("{}: {e}", path.display())))?;
    let gold: GoldMapping =
        serde_json::from_str(&text).map_err(|e| Error::MalformedGold(format!("{}: {e}", path.display())))?;
    Ok(gold)
}

/// Scores a mapping document and attaches the timing row when one exists.
pub fn evaluate(doc: &MappingDocument, gold: &GoldMapping, timing: Option<&Timing>) -> Result<EvalReport, Error> {
    let mut report = compare(&doc.mapping, gold)?;
    report.timing = timing.map(|t| TimingRow {
        tables: t.tables,
        columns: t.columns,
        seconds: t.total_seconds,
    });
    Ok(report)
}
