//! Scoring a [`SchemaMapping`] against a gold mapping, and report tables.
//!
//! Every gold table class, gold column and gold foreign key is one element.
//! An element is correct on an exact IRI match against any of its accepted
//! aliases (or when both sides are unmapped, or the foreign key endpoints are
//! equal). Each element is bucketed by the confidence the pipeline emitted
//! for it; a gold foreign key the mapping lacks is bucketed by the relation
//! stage's overall confidence.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_rational::Ratio;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::confidence::Confidence;
use crate::mapping::SchemaMapping;

/// Expected value of a gold column: accepted property IRIs, or unmapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldProperty {
    Unmapped,
    AnyOf(Vec<String>),
}

impl GoldProperty {
    fn matches(&self, actual: Option<&str>) -> bool {
        match (self, actual) {
            (GoldProperty::Unmapped, None) => true,
            (GoldProperty::AnyOf(aliases), Some(a)) => aliases.iter().any(|x| x == a),
            _ => false,
        }
    }
}

const UNMAPPED: &str = "unmapped";

impl Serialize for GoldProperty {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GoldProperty::Unmapped => s.serialize_str(UNMAPPED),
            GoldProperty::AnyOf(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for GoldProperty {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(String),
            Many(Vec<String>),
            Null(()),
        }
        match Raw::deserialize(d)? {
            Raw::Null(()) => Ok(GoldProperty::Unmapped),
            Raw::One(s) if s == UNMAPPED => Ok(GoldProperty::Unmapped),
            Raw::One(s) => Ok(GoldProperty::AnyOf(alloc::vec![s])),
            Raw::Many(v) if v.is_empty() => Err(de::Error::custom("empty alias list")),
            Raw::Many(v) => Ok(GoldProperty::AnyOf(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldColumn {
    pub column: String,
    pub property: GoldProperty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTable {
    pub table: String,
    /// Accepted class IRIs.
    pub class: Vec<String>,
    pub columns: Vec<GoldColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldForeignKey {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldMapping {
    pub db_id: String,
    pub tables: Vec<GoldTable>,
    #[serde(default)]
    pub foreign_keys: Vec<GoldForeignKey>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub count: u64,
    pub correct: u64,
}

impl Tally {
    pub fn add(&mut self, correct: bool) {
        self.count += 1;
        self.correct += u64::from(correct);
    }

    /// Exact accuracy as a fraction, `None` for an empty bucket.
    pub fn accuracy(&self) -> Option<Ratio<u64>> {
        (self.count > 0).then(|| Ratio::new(self.correct, self.count))
    }

    /// Percentage with two decimals, or `/` for an empty bucket.
    pub fn percent_display(&self) -> String {
        match self.accuracy() {
            Some(r) => format_percent(r),
            None => "/".into(),
        }
    }
}

/// Formats a fraction in `[0, 1]` as a percentage with two decimals, rounding
/// half up in exact integer arithmetic (37/47 → `78.72`).
pub fn format_percent(r: Ratio<u64>) -> String {
    let (num, den) = (*r.numer(), *r.denom());
    let hundredths = (num * 20_000 + den) / (2 * den);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementCategory {
    Class,
    Property,
    ForeignKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementResult {
    pub category: ElementCategory,
    pub key: String,
    pub expected: String,
    pub actual: String,
    pub confidence: Confidence,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub tables: u64,
    pub columns: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Tally,
    pub high: Tally,
    pub medium: Tally,
    pub low: Tally,
    pub classes: Tally,
    pub properties: Tally,
    pub foreign_keys: Tally,
    pub elements: Vec<ElementResult>,
    pub timing: Option<TimingRow>,
}

impl EvalReport {
    pub fn bucket(&self, c: Confidence) -> &Tally {
        match c {
            Confidence::High => &self.high,
            Confidence::Medium => &self.medium,
            Confidence::Low => &self.low,
        }
    }

    fn record(&mut self, element: ElementResult) {
        self.overall.add(element.correct);
        match element.confidence {
            Confidence::High => self.high.add(element.correct),
            Confidence::Medium => self.medium.add(element.correct),
            Confidence::Low => self.low.add(element.correct),
        }
        match element.category {
            ElementCategory::Class => self.classes.add(element.correct),
            ElementCategory::Property => self.properties.add(element.correct),
            ElementCategory::ForeignKey => self.foreign_keys.add(element.correct),
        }
        self.elements.push(element);
    }

    /// Builds a report straight from element results.
    pub fn from_elements(elements: impl IntoIterator<Item = ElementResult>) -> Self {
        let mut report = Self::default();
        for e in elements {
            report.record(e);
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("mismatched database: {0}")]
pub struct MismatchedDatabase(pub String);

fn or_unmapped(s: Option<&str>) -> String {
    s.unwrap_or(UNMAPPED).to_string()
}

/// Scores `mapping` against `gold`.
pub fn compare(mapping: &SchemaMapping, gold: &GoldMapping) -> Result<EvalReport, MismatchedDatabase> {
    if mapping.db_id != gold.db_id {
        return Err(MismatchedDatabase(format!(
            "mapping is for {}, gold is for {}",
            mapping.db_id, gold.db_id
        )));
    }
    let mut report = EvalReport::default();
    for gt in &gold.tables {
        let tm = mapping
            .table(&gt.table)
            .ok_or_else(|| MismatchedDatabase(format!("table {} missing from mapping", gt.table)))?;
        report.record(ElementResult {
            category: ElementCategory::Class,
            key: gt.table.clone(),
            expected: gt.class.join(" | "),
            actual: tm.class_iri.clone(),
            confidence: tm.confidence,
            correct: gt.class.contains(&tm.class_iri),
        });
        for gc in &gt.columns {
            let col = tm
                .column(&gc.column)
                .ok_or_else(|| MismatchedDatabase(format!("column {}.{} missing from mapping", gt.table, gc.column)))?;
            report.record(ElementResult {
                category: ElementCategory::Property,
                key: format!("{}.{}", gt.table, gc.column),
                expected: match &gc.property {
                    GoldProperty::Unmapped => UNMAPPED.into(),
                    GoldProperty::AnyOf(v) => v.join(" | "),
                },
                actual: or_unmapped(col.property_iri.as_deref()),
                confidence: col.confidence,
                correct: gc.property.matches(col.property_iri.as_deref()),
            });
        }
    }
    for gfk in &gold.foreign_keys {
        // duplicate links may differ in confidence; the highest one counts
        let found = mapping
            .fk_links
            .iter()
            .filter(|l| {
                l.from_table == gfk.from_table
                    && l.from_column == gfk.from_column
                    && l.to_table == gfk.to_table
                    && l.to_column == gfk.to_column
            })
            .max_by_key(|l| l.confidence);
        let key = format!(
            "{}.{} -> {}.{}",
            gfk.from_table, gfk.from_column, gfk.to_table, gfk.to_column
        );
        report.record(ElementResult {
            category: ElementCategory::ForeignKey,
            expected: key.clone(),
            actual: if found.is_some() { key.clone() } else { "absent".into() },
            key,
            confidence: found.map_or(mapping.relation_confidence, |l| l.confidence),
            correct: found.is_some(),
        });
    }
    Ok(report)
}

fn render_table(out: &mut String, header: &[&str], rows: &[Vec<String>], right_align_from: usize) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let mut first = true;
        for (i, cell) in cells.enumerate() {
            if !first {
                out.push_str(" | ");
            }
            first = false;
            let pad = widths[i] - cell.chars().count();
            if i >= right_align_from {
                out.extend(core::iter::repeat_n(' ', pad));
                out.push_str(cell);
            } else {
                out.push_str(cell);
                out.extend(core::iter::repeat_n(' ', pad));
            }
        }
        let trimmed = out.trim_end_matches(' ').len();
        out.truncate(trimmed);
        out.push('\n');
    };
    line(out, &mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in rows {
        line(out, &mut row.iter().map(String::as_str));
    }
}

/// Seconds without trailing zeros, at most three decimals (`122`, `0.046`).
pub fn format_seconds(seconds: f64) -> String {
    let mut s = format!("{seconds:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// Plain-text accuracy and timing tables, one row per labelled report.
/// Empty confidence buckets show `/`; reports without timing are left out of
/// the timing table.
pub fn render_report(reports: &[(String, EvalReport)]) -> String {
    let mut out = String::new();
    let acc_rows: Vec<Vec<String>> = reports
        .iter()
        .map(|(label, r)| {
            alloc::vec![
                label.clone(),
                r.overall.percent_display(),
                r.high.percent_display(),
                r.medium.percent_display(),
                r.low.percent_display(),
            ]
        })
        .collect();
    render_table(
        &mut out,
        &["Database", "Overall (%)", "HIGH (%)", "MEDIUM (%)", "LOW (%)"],
        &acc_rows,
        1,
    );
    out.push('\n');
    let timing_rows: Vec<Vec<String>> = reports
        .iter()
        .filter_map(|(_, r)| r.timing)
        .map(|t| alloc::vec![t.tables.to_string(), t.columns.to_string(), format_seconds(t.seconds),])
        .collect();
    render_table(
        &mut out,
        &["Number of tables", "Number of columns", "Execution time (sec)"],
        &timing_rows,
        0,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{ColumnAssignment, FkLink, Provenance, TableMapping};
    use crate::profile::InferredType;
    use alloc::vec;
    use Confidence::*;

    fn mapping() -> SchemaMapping {
        SchemaMapping {
            db_id: "shop".into(),
            tables: vec![TableMapping {
                table: "orders".into(),
                class_iri: "https://schema.org/Order".into(),
                confidence: High,
                primary_key: vec![],
                columns: vec![
                    ColumnAssignment {
                        column: "total".into(),
                        property_iri: Some("https://schema.org/price".into()),
                        confidence: Medium,
                        inferred_type: InferredType::Real,
                    },
                    ColumnAssignment {
                        column: "note".into(),
                        property_iri: None,
                        confidence: Low,
                        inferred_type: InferredType::Text,
                    },
                ],
            }],
            fk_links: vec![FkLink {
                from_table: "orders".into(),
                from_column: "customer_id".into(),
                to_table: "customers".into(),
                to_column: "id".into(),
                predicate: "https://schema.org/customer".into(),
                confidence: High,
            }],
            relation_confidence: Medium,
            final_confidence: Some(High),
            provenance: Provenance::default(),
        }
    }

    fn gold() -> GoldMapping {
        serde_json::from_str(
            r#"{"db_id":"shop","tables":[{"table":"orders","class":["https://schema.org/Order"],
               "columns":[{"column":"total","property":["https://schema.org/totalPrice","https://schema.org/price"]},
                          {"column":"note","property":"unmapped"}]}],
               "foreign_keys":[{"from_table":"orders","from_column":"customer_id","to_table":"customers","to_column":"id"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn identical_mapping_scores_full_marks() {
        let r = compare(&mapping(), &gold()).unwrap();
        assert_eq!(r.overall, Tally { count: 4, correct: 4 });
        assert_eq!(r.overall.percent_display(), "100.00");
        assert_eq!(r.high.percent_display(), "100.00");
        assert_eq!(r.low.percent_display(), "100.00");
        assert_eq!(r.foreign_keys.count, 1);
    }

    #[test]
    fn nothing_matches() {
        let mut m = mapping();
        m.tables[0].class_iri = "https://schema.org/Thing".into();
        m.tables[0].columns[0].property_iri = None;
        m.tables[0].columns[1].property_iri = Some("https://schema.org/text".into());
        m.fk_links.clear();
        let r = compare(&m, &gold()).unwrap();
        assert_eq!(r.overall.percent_display(), "0.00");
        // absent fk falls into the relation-level bucket
        assert_eq!(r.medium.count, 2);
    }

    #[test]
    fn mismatched_database() {
        let mut g = gold();
        g.db_id = "other".into();
        assert!(compare(&mapping(), &g).is_err());
        let mut g = gold();
        g.tables[0].columns.push(GoldColumn {
            column: "ghost".into(),
            property: GoldProperty::Unmapped,
        });
        assert!(compare(&mapping(), &g).is_err());
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(format_percent(Ratio::new(37, 47)), "78.72");
        assert_eq!(format_percent(Ratio::new(1, 8)), "12.50");
        assert_eq!(format_percent(Ratio::new(2, 3)), "66.67");
        assert_eq!(format_percent(Ratio::new(1, 1)), "100.00");
        assert_eq!(format_percent(Ratio::new(0, 5)), "0.00");
        // 0.125% rounds half up
        assert_eq!(format_percent(Ratio::new(1, 800)), "0.13");
    }

    #[test]
    fn gold_property_forms() {
        let p: GoldProperty = serde_json::from_str("null").unwrap();
        assert_eq!(p, GoldProperty::Unmapped);
        let p: GoldProperty = serde_json::from_str(r#""https://schema.org/name""#).unwrap();
        assert_eq!(p, GoldProperty::AnyOf(vec!["https://schema.org/name".into()]));
        assert!(serde_json::from_str::<GoldProperty>("[]").is_err());
        assert_eq!(serde_json::to_string(&GoldProperty::Unmapped).unwrap(), r#""unmapped""#);
    }

    #[test]
    fn empty_report_list_renders_headers_only() {
        let text = render_report(&[]);
        assert_eq!(
            text,
            "Database | Overall (%) | HIGH (%) | MEDIUM (%) | LOW (%)\n\
             ---------+-------------+----------+------------+--------\n\
             \n\
             Number of tables | Number of columns | Execution time (sec)\n\
             -----------------+-------------------+---------------------\n"
        );
    }

    #[test]
    fn empty_bucket_and_timing_row() {
        let r = EvalReport {
            overall: Tally { count: 10, correct: 9 },
            high: Tally { count: 7, correct: 6 },
            medium: Tally { count: 3, correct: 3 },
            timing: Some(TimingRow {
                tables: 3,
                columns: 10,
                seconds: 122.0,
            }),
            ..Default::default()
        };
        let text = render_report(&[("Movies".into(), r)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "Movies   |       90.00 |    85.71 |     100.00 |       /");
        assert_eq!(lines[6], "               3 |                10 |                  122");
    }

    #[test]
    fn seconds_format() {
        assert_eq!(format_seconds(122.0), "122");
        assert_eq!(format_seconds(0.0456), "0.046");
        assert_eq!(format_seconds(1.5), "1.5");
    }
}
