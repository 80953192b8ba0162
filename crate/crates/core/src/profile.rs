//! Table and column profiles: type inference and summary statistics.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Default number of sample rows shown to the mapping agent.
pub const DEFAULT_SAMPLE_ROWS: usize = 5;
/// Longest value (in characters) kept verbatim in samples and top values.
pub const MAX_VALUE_CHARS: usize = 120;
/// Number of most frequent values kept per column.
pub const TOP_VALUES: usize = 5;
/// Marker appended to truncated values.
pub const ELLIPSIS: char = '…';

/// A single cell value. Blobs are carried as hex text by readers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Integer(_) => 1,
            Value::Real(_) => 2,
            Value::Text(_) => 3,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Integer(i) => Some(*i),
            Value::Text(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) if r.is_finite() => Some(*r),
            Value::Text(s) => s.trim().parse::<f64>().ok().filter(|r| r.is_finite()),
            _ => None,
        }
    }

    pub fn as_bool(&self, declared_bool: bool) -> Option<bool> {
        match self {
            Value::Integer(0) if declared_bool => Some(false),
            Value::Integer(1) if declared_bool => Some(true),
            Value::Text(s) => {
                let s = s.trim();
                if ["true", "t", "yes", "y"].iter().any(|w| s.eq_ignore_ascii_case(w)) {
                    Some(true)
                } else if ["false", "f", "no", "n"].iter().any(|w| s.eq_ignore_ascii_case(w)) {
                    Some(false)
                } else if declared_bool && (s == "0" || s == "1") {
                    Some(s == "1")
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Copy of the value with long text shortened to [`MAX_VALUE_CHARS`].
    pub fn truncated(&self) -> Value {
        match self {
            Value::Text(s) => Value::Text(truncate_chars(s, MAX_VALUE_CHARS)),
            other => other.clone(),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

pub fn truncate_chars(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        None => s.to_string(),
        Some((cut, _)) => {
            let mut out = String::with_capacity(cut + ELLIPSIS.len_utf8());
            out.push_str(&s[..cut]);
            out.push(ELLIPSIS);
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InferredType {
    Integer,
    Real,
    Text,
    Date,
    Boolean,
    Unknown,
}

/// `YYYY-MM-DD`, optionally followed by a time part introduced by `T` or a space.
pub fn is_iso_date(s: &str) -> bool {
    let b = s.trim().as_bytes();
    if b.len() < 10 || !(b.len() == 10 || b[10] == b'T' || b[10] == b' ') {
        return false;
    }
    let digits = |r: core::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    if !(digits(0..4) && b[4] == b'-' && digits(5..7) && b[7] == b'-' && digits(8..10)) {
        return false;
    }
    let month = (b[5] - b'0') * 10 + (b[6] - b'0');
    let day = (b[8] - b'0') * 10 + (b[9] - b'0');
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

fn parses_as(value: &Value, ty: InferredType, declared_bool: bool) -> bool {
    match ty {
        InferredType::Boolean => value.as_bool(declared_bool).is_some(),
        InferredType::Integer => value.as_i64().is_some(),
        InferredType::Real => value.as_f64().is_some(),
        InferredType::Date => matches!(value, Value::Text(s) if is_iso_date(s)),
        InferredType::Text | InferredType::Unknown => true,
    }
}

/// Infers a column type from its values.
///
/// Candidates are tried in the order Boolean, Integer, Real, Date; the first
/// one that at least 90% of the non-null values parse as wins. Otherwise the
/// column is Text, or Unknown when it has no non-null value at all.
pub fn infer_type(values: &[Value], declared_type: &str) -> InferredType {
    let declared_bool = declared_type.to_ascii_uppercase().contains("BOOL");
    let non_null: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if non_null.is_empty() {
        return InferredType::Unknown;
    }
    let n = non_null.len();
    for ty in [
        InferredType::Boolean,
        InferredType::Integer,
        InferredType::Real,
        InferredType::Date,
    ] {
        let ok = non_null.iter().filter(|v| parses_as(v, ty, declared_bool)).count();
        if ok * 10 >= n * 9 {
            return ty;
        }
    }
    InferredType::Text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopValue {
    pub value: Value,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub row_count: u64,
    pub null_count: u64,
    /// Distinct non-null values.
    pub distinct_count: u64,
    pub min: Option<Value>,
    pub max: Option<Value>,
    /// Numeric columns only.
    pub mean: Option<f64>,
    /// Text columns only, in characters.
    pub avg_length: Option<f64>,
    /// Most frequent non-null values, by count desc then value asc.
    pub top_values: Vec<TopValue>,
}

/// Statistics over a full column. Min and max are numeric for Integer and
/// Real columns (over the values that parse) and lexicographic on the text
/// form otherwise.
pub fn column_stats(values: &[Value], ty: InferredType) -> ColumnStats {
    let mut freq: BTreeMap<&Value, u64> = BTreeMap::new();
    let mut null_count = 0u64;
    for v in values {
        if v.is_null() {
            null_count += 1;
        } else {
            *freq.entry(v).or_insert(0) += 1;
        }
    }

    let mut min = None;
    let mut max = None;
    let mut mean = None;
    let mut avg_length = None;
    let non_null = freq.keys().copied();
    match ty {
        InferredType::Integer => {
            let mut sum = 0f64;
            let mut n = 0u64;
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for v in values.iter().filter_map(Value::as_i64) {
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v as f64;
                n += 1;
            }
            if n > 0 {
                min = Some(Value::Integer(lo));
                max = Some(Value::Integer(hi));
                mean = Some(sum / n as f64);
            }
        }
        InferredType::Real => {
            let mut sum = 0f64;
            let mut n = 0u64;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in values.iter().filter_map(Value::as_f64) {
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
                n += 1;
            }
            if n > 0 {
                min = Some(Value::Real(lo));
                max = Some(Value::Real(hi));
                mean = Some(sum / n as f64);
            }
        }
        _ => {
            let mut texts: Vec<String> = non_null.map(|v| v.to_string()).collect();
            texts.sort();
            min = texts.first().map(|s| Value::Text(truncate_chars(s, MAX_VALUE_CHARS)));
            max = texts.last().map(|s| Value::Text(truncate_chars(s, MAX_VALUE_CHARS)));
            if ty == InferredType::Text {
                let (mut chars, mut n) = (0u64, 0u64);
                for v in values.iter().filter(|v| !v.is_null()) {
                    chars += v.to_string().chars().count() as u64;
                    n += 1;
                }
                if n > 0 {
                    avg_length = Some(chars as f64 / n as f64);
                }
            }
        }
    }

    let mut ranked: Vec<(&Value, u64)> = freq.iter().map(|(v, c)| (*v, *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let top_values = ranked
        .into_iter()
        .take(TOP_VALUES)
        .map(|(v, count)| TopValue {
            value: v.truncated(),
            count,
        })
        .collect();

    ColumnStats {
        row_count: values.len() as u64,
        null_count,
        distinct_count: freq.len() as u64,
        min,
        max,
        mean,
        avg_length,
        top_values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub declared_type: String,
    pub inferred_type: InferredType,
    pub stats: ColumnStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A foreign key declared in the database schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredForeignKey {
    pub column: String,
    pub to_table: String,
    pub to_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableProfile {
    pub name: String,
    pub columns: Vec<ColumnProfile>,
    /// First rows in physical order, long text truncated.
    pub sample_rows: Vec<Vec<Value>>,
    pub row_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Key metadata declared by the database schema. Only ever used as a hint.
    #[serde(default)]
    pub declared_primary_key: Vec<String>,
    #[serde(default)]
    pub declared_foreign_keys: Vec<DeclaredForeignKey>,
}

impl TableProfile {
    pub fn column(&self, name: &str) -> Option<&ColumnProfile> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub declared_type: String,
}

/// Profiles a table from its full row set. Rows must have one cell per column.
pub fn profile_rows(table: &str, columns: &[ColumnSpec], rows: &[Vec<Value>], sample_k: usize) -> TableProfile {
    let profiles = columns
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let values: Vec<Value> = rows.iter().map(|r| r.get(i).cloned().unwrap_or(Value::Null)).collect();
            let inferred_type = infer_type(&values, &spec.declared_type);
            ColumnProfile {
                name: spec.name.clone(),
                declared_type: spec.declared_type.clone(),
                inferred_type,
                stats: column_stats(&values, inferred_type),
                description: None,
            }
        })
        .collect();
    let sample_rows = rows
        .iter()
        .take(sample_k)
        .map(|r| {
            (0..columns.len())
                .map(|i| r.get(i).map(Value::truncated).unwrap_or(Value::Null))
                .collect()
        })
        .collect();
    TableProfile {
        name: table.to_string(),
        columns: profiles,
        sample_rows,
        row_count: rows.len() as u64,
        description: None,
        declared_primary_key: Vec::new(),
        declared_foreign_keys: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn text(s: &str) -> Value {
        Value::Text(s.into())
    }

    #[test]
    fn three_row_integer_column() {
        let values = vec![Value::Integer(1), Value::Integer(2), Value::Null];
        let ty = infer_type(&values, "INTEGER");
        assert_eq!(ty, InferredType::Integer);
        let s = column_stats(&values, ty);
        assert_eq!(s.row_count, 3);
        assert_eq!(s.null_count, 1);
        assert_eq!(s.distinct_count, 2);
        assert_eq!(s.min, Some(Value::Integer(1)));
        assert_eq!(s.max, Some(Value::Integer(2)));
        assert_eq!(s.mean, Some(1.5));
        assert_eq!(s.avg_length, None);
    }

    #[test]
    fn empty_column() {
        let s = column_stats(&[], InferredType::Unknown);
        assert_eq!(s.row_count, 0);
        assert_eq!(s.distinct_count, 0);
        assert!(s.min.is_none() && s.mean.is_none() && s.top_values.is_empty());
        assert_eq!(infer_type(&[Value::Null], "TEXT"), InferredType::Unknown);
    }

    #[test]
    fn ninety_percent_threshold() {
        let mut values: Vec<Value> = (0..9).map(|i| text(&alloc::format!("{i}"))).collect();
        values.push(text("n/a"));
        assert_eq!(infer_type(&values, "TEXT"), InferredType::Integer);
        values.push(text("unknown"));
        // 9 of 11 parse: below threshold
        assert_eq!(infer_type(&values, "TEXT"), InferredType::Text);
    }

    #[test]
    fn other_types() {
        assert_eq!(
            infer_type(&[Value::Real(1.5), Value::Integer(2)], "REAL"),
            InferredType::Real
        );
        assert_eq!(
            infer_type(&[text("2020-01-05"), text("1999-12-31 10:00:00")], "TEXT"),
            InferredType::Date
        );
        assert_eq!(infer_type(&[text("T"), text("F")], "bool"), InferredType::Boolean);
        assert_eq!(
            infer_type(&[Value::Integer(0), Value::Integer(1)], "BOOLEAN"),
            InferredType::Boolean
        );
        assert_eq!(
            infer_type(&[Value::Integer(0), Value::Integer(1)], "INT"),
            InferredType::Integer
        );
        assert!(!is_iso_date("2020-13-01"));
        assert!(!is_iso_date("2020-01-0x"));
        assert!(!is_iso_date("2020-01-01x"));
    }

    #[test]
    fn text_stats_and_top_values() {
        let values = vec![text("bb"), text("a"), text("bb"), text("ccc"), Value::Null];
        let s = column_stats(&values, InferredType::Text);
        assert_eq!(s.min, Some(text("a")));
        assert_eq!(s.max, Some(text("ccc")));
        assert_eq!(s.avg_length, Some(2.0));
        assert_eq!(
            s.top_values[0],
            TopValue {
                value: text("bb"),
                count: 2
            }
        );
        assert_eq!(s.top_values[1].value, text("a"));
    }

    #[test]
    fn long_values_are_truncated() {
        let long: String = std::iter::repeat_n('x', 200).collect();
        let t = truncate_chars(&long, MAX_VALUE_CHARS);
        assert_eq!(t.chars().count(), MAX_VALUE_CHARS + 1);
        assert!(t.ends_with(ELLIPSIS));
        assert_eq!(truncate_chars("short", MAX_VALUE_CHARS), "short");
        let p = profile_rows(
            "t",
            &[ColumnSpec {
                name: "c".into(),
                declared_type: "TEXT".into(),
            }],
            &[vec![Value::Text(long)]],
            5,
        );
        assert_eq!(p.sample_rows[0][0], Value::Text(t.clone()));
        assert_eq!(p.columns[0].stats.top_values[0].value, Value::Text(t));
    }

    #[test]
    fn sample_is_first_k_rows() {
        let cols = [ColumnSpec {
            name: "x".into(),
            declared_type: "INTEGER".into(),
        }];
        let rows: Vec<Vec<Value>> = (0..3).map(|i| vec![Value::Integer(i)]).collect();
        let p = profile_rows("t", &cols, &rows, 10);
        assert_eq!(p.sample_rows.len(), 3);
        assert_eq!(p.row_count, 3);
        let p = profile_rows("t", &cols, &rows, 2);
        assert_eq!(p.sample_rows, vec![vec![Value::Integer(0)], vec![Value::Integer(1)]]);
        let p = profile_rows("t", &cols, &[], 5);
        assert!(p.sample_rows.is_empty());
    }

    #[test]
    fn value_json_shape() {
        let row = vec![Value::Null, Value::Integer(3), Value::Real(2.5), text("x")];
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(json, r#"[null,3,2.5,"x"]"#);
        let back: Vec<Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);
    }
}
