//! Read-only SQLite introspection, Spider manifests and annotation sidecars.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kgmap_core::materialize::TableData;
use kgmap_core::profile::{profile_rows, ColumnSpec, DeclaredForeignKey, TableProfile, Value};
use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::Error;

/// A database opened read-only. Nothing done through it can change the file.
pub struct Database {
    conn: Connection,
    path: PathBuf,
    db_id: String,
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

/// Finds the SQLite file for `path`: either the file itself or a Spider
/// style `<db_id>/` directory holding `<db_id>.sqlite`.
pub fn resolve_database_path(path: &Path) -> Result<PathBuf, Error> {
    if path.is_dir() {
        let id = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::UnreadableDatabase(format!("{} has no usable name", path.display())))?;
        let file = path.join(format!("{id}.sqlite"));
        if file.is_file() {
            return Ok(file);
        }
        return Err(Error::UnreadableDatabase(format!("{} does not exist", file.display())));
    }
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    Err(Error::UnreadableDatabase(format!("{} does not exist", path.display())))
}

impl Database {
    pub fn open(path: &Path) -> Result<Self, Error> {
        let path = resolve_database_path(path)?;
        let conn = Connection::open_with_flags(
            &path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )
        .map_err(|e| Error::UnreadableDatabase(format!("{}: {e}", path.display())))?;
        conn.pragma_update(None, "query_only", true)?;
        // force a schema read so non-database files fail here
        conn.query_row("SELECT count(*) FROM sqlite_master", [], |r| r.get::<_, i64>(0))
            .map_err(|e| Error::UnreadableDatabase(format!("{}: {e}", path.display())))?;
        let db_id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("db").to_string();
        Ok(Self { conn, path, db_id })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    /// User tables in ascending byte order.
    pub fn list_tables(&self) -> Result<Vec<String>, Error> {
        let mut stmt = self.conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\'",
        )?;
        let mut names = stmt
            .query_map([], |r| r.get::<_, String>(0))?
            .collect::<Result<Vec<_>, _>>()?;
        names.sort();
        Ok(names)
    }

    fn ensure_table(&self, name: &str) -> Result<(), Error> {
        let exists: bool = self.conn.query_row(
            "SELECT EXISTS(SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?1)",
            [name],
            |r| r.get(0),
        )?;
        if exists {
            Ok(())
        } else {
            Err(Error::UnknownTable(name.to_string()))
        }
    }

    /// Column specs and declared primary key (in key order).
    fn table_info(&self, name: &str) -> Result<(Vec<ColumnSpec>, Vec<String>), Error> {
        let mut stmt = self
            .conn
            .prepare(&format!("PRAGMA table_info({})", quote_ident(name)))?;
        let rows = stmt
            .query_map([], |r| {
                Ok((
                    r.get::<_, String>(1)?,
                    r.get::<_, Option<String>>(2)?.unwrap_or_default(),
                    r.get::<_, i64>(5)?,
                ))
            })?
            .collect::<Result<Vec<_>, _>>()?;
        let mut pk: Vec<(i64, String)> = rows
            .iter()
            .filter(|(_, _, k)| *k > 0)
            .map(|(n, _, k)| (*k, n.clone()))
            .collect();
        pk.sort();
        let specs = rows
            .into_iter()
            .map(|(name, declared_type, _)| ColumnSpec { name, declared_type })
            .collect();
        Ok((specs, pk.into_iter().map(|(_, n)| n).collect()))
    }

    fn declared_foreign_keys(&self, name: &str) -> Result<Vec<DeclaredForeignKey>, Error> {
        let mut stmt = self
            .conn
            .prepare(&format!("PRAGMA foreign_key_list({})", quote_ident(name)))?;
        let raw = stmt
            .query_map([], |r| {
                Ok((
                    r.get::<_, usize>(1)?,
                    r.get::<_, String>(2)?,
                    r.get::<_, String>(3)?,
                    r.get::<_, Option<String>>(4)?,
                ))
            })?
            .collect::<Result<Vec<_>, _>>()?;
        let (specs, _) = self.table_info(name)?;
        let position = |col: &str| specs.iter().position(|s| s.name == col).unwrap_or(usize::MAX);
        let mut out = Vec::with_capacity(raw.len());
        for (seq, to_table, column, to_column) in raw {
            // a missing target column means the target's primary key
            let to_column = match to_column {
                Some(c) => c,
                None => self
                    .table_info(&to_table)
                    .ok()
                    .and_then(|(_, pk)| pk.into_iter().nth(seq))
                    .unwrap_or_default(),
            };
            out.push(DeclaredForeignKey {
                column,
                to_table,
                to_column,
            });
        }
        // the pragma lists constraints newest first; report them in column order
        out.sort_by_key(|fk| position(&fk.column));
        Ok(out)
    }

    /// All rows of a table in physical order.
    pub fn read_table(&self, name: &str) -> Result<TableData, Error> {
        self.ensure_table(name)?;
        let (specs, _) = self.table_info(name)?;
        let columns: Vec<String> = specs.into_iter().map(|s| s.name).collect();
        let rows = self.read_rows(name, columns.len())?;
        Ok(TableData {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    fn read_rows(&self, name: &str, width: usize) -> Result<Vec<Vec<Value>>, Error> {
        if width == 0 {
            return Ok(Vec::new());
        }
        let mut stmt = self.conn.prepare(&format!("SELECT * FROM {}", quote_ident(name)))?;
        let rows = stmt
            .query_map([], |r| (0..width).map(|i| r.get_ref(i).map(convert)).collect())?
            .collect::<Result<Vec<Vec<Value>>, _>>()?;
        Ok(rows)
    }

    /// Profiles one table from a single scan of its rows.
    pub fn profile_table(&self, name: &str, sample_k: usize) -> Result<TableProfile, Error> {
        self.ensure_table(name)?;
        let (specs, pk) = self.table_info(name)?;
        let rows = self.read_rows(name, specs.len())?;
        let mut profile = profile_rows(name, &specs, &rows, sample_k);
        profile.declared_primary_key = pk;
        profile.declared_foreign_keys = self.declared_foreign_keys(name)?;
        Ok(profile)
    }

    pub fn profile_all(&self, sample_k: usize, annotations: Option<&Annotations>) -> Result<Vec<TableProfile>, Error> {
        let mut out = Vec::new();
        for table in self.list_tables()? {
            let mut p = self.profile_table(&table, sample_k)?;
            if let Some(a) = annotations {
                a.apply(&mut p);
            }
            out.push(p);
        }
        Ok(out)
    }
}

fn convert(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::Integer(i),
        ValueRef::Real(r) => Value::Real(r),
        ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::Text(format!("x'{}'", hex::encode(b))),
    }
}

/// Optional descriptions for tables and columns, read from a sidecar file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    #[serde(default)]
    pub tables: BTreeMap<String, TableAnnotation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableAnnotation {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub columns: BTreeMap<String, String>,
}

impl Annotations {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::MalformedAnnotations(format!("{}: {e}", path.display())))
    }

    /// The sidecar next to a database file: `<db_id>.annotations.json`.
    pub fn sidecar_path(db_file: &Path) -> PathBuf {
        let stem = db_file.file_stem().and_then(|s| s.to_str()).unwrap_or("db");
        db_file.with_file_name(format!("{stem}.annotations.json"))
    }

    pub fn apply(&self, profile: &mut TableProfile) {
        let Some(t) = self.tables.get(&profile.name) else {
            return;
        };
        if t.description.is_some() {
            profile.description = t.description.clone();
        }
        for col in &mut profile.columns {
            if let Some(d) = t.columns.get(&col.name) {
                col.description = Some(d.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldForeignKeyRef {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
}

/// Schema facts from a Spider `tables.json` manifest entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSchema {
    pub db_id: String,
    pub tables: Vec<String>,
    pub columns: BTreeMap<String, Vec<String>>,
    pub primary_keys: Vec<(String, Vec<String>)>,
    pub foreign_keys: Vec<GoldForeignKeyRef>,
}

fn manifest_err(msg: impl Into<String>) -> Error {
    Error::MalformedManifest(msg.into())
}

fn string_list(entry: &Json, key: &str) -> Result<Vec<String>, Error> {
    entry
        .get(key)
        .and_then(Json::as_array)
        .ok_or_else(|| manifest_err(format!("missing {key}")))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(String::from)
                .ok_or_else(|| manifest_err(format!("{key} holds a non-string")))
        })
        .collect()
}

fn index_of(v: &Json, what: &str) -> Result<usize, Error> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| manifest_err(format!("{what} is not a column index")))
}

/// Reads the entry for `db_id` and resolves its column-index keys to names.
/// The `*_original` name lists are preferred since they match the database.
pub fn load_gold_schema(manifest_path: &Path, db_id: &str) -> Result<GoldSchema, Error> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let doc: Json = serde_json::from_str(&text).map_err(|e| manifest_err(format!("not JSON: {e}")))?;
    let entries = doc.as_array().ok_or_else(|| manifest_err("manifest is not a list"))?;
    let entry = entries
        .iter()
        .find(|e| e.get("db_id").and_then(Json::as_str) == Some(db_id))
        .ok_or_else(|| Error::UnknownDbId(db_id.to_string()))?;

    let tables = if entry.get("table_names_original").is_some() {
        string_list(entry, "table_names_original")?
    } else {
        string_list(entry, "table_names")?
    };
    let col_key = if entry.get("column_names_original").is_some() {
        "column_names_original"
    } else {
        "column_names"
    };
    let raw_cols = entry
        .get(col_key)
        .and_then(Json::as_array)
        .ok_or_else(|| manifest_err(format!("missing {col_key}")))?;
    // index -> (table, column); index 0 is the `*` pseudo column
    let mut by_index: Vec<Option<(String, String)>> = Vec::with_capacity(raw_cols.len());
    let mut columns: BTreeMap<String, Vec<String>> = tables.iter().map(|t| (t.clone(), Vec::new())).collect();
    for c in raw_cols {
        let pair = c
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| manifest_err("column entry is not a pair"))?;
        let name = pair[1]
            .as_str()
            .ok_or_else(|| manifest_err("column name is not a string"))?;
        match pair[0].as_i64() {
            Some(-1) => by_index.push(None),
            Some(t) if t >= 0 && (t as usize) < tables.len() => {
                let table = tables[t as usize].clone();
                columns.get_mut(&table).expect("table listed").push(name.to_string());
                by_index.push(Some((table, name.to_string())));
            }
            _ => return Err(manifest_err(format!("column {name} has an invalid table index"))),
        }
    }
    let resolve = |v: &Json| -> Result<(String, String), Error> {
        let i = index_of(v, "key")?;
        by_index
            .get(i)
            .cloned()
            .flatten()
            .ok_or_else(|| manifest_err(format!("column index {i} does not name a column")))
    };

    let mut pk_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for pk in entry
        .get("primary_keys")
        .and_then(Json::as_array)
        .cloned()
        .unwrap_or_default()
    {
        // older manifests list single indices, newer ones may nest composites
        let parts: Vec<Json> = match pk {
            Json::Array(parts) => parts,
            single => vec![single],
        };
        for p in &parts {
            let (table, column) = resolve(p)?;
            pk_map.entry(table).or_default().push(column);
        }
    }
    let primary_keys = tables
        .iter()
        .filter_map(|t| pk_map.remove(t).map(|cols| (t.clone(), cols)))
        .collect();

    let mut foreign_keys = Vec::new();
    for fk in entry
        .get("foreign_keys")
        .and_then(Json::as_array)
        .cloned()
        .unwrap_or_default()
    {
        let pair = fk
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| manifest_err("foreign key is not a pair"))?;
        let (from_table, from_column) = resolve(&pair[0])?;
        let (to_table, to_column) = resolve(&pair[1])?;
        foreign_keys.push(GoldForeignKeyRef {
            from_table,
            from_column,
            to_table,
            to_column,
        });
    }
    Ok(GoldSchema {
        db_id: db_id.to_string(),
        tables,
        columns,
        primary_keys,
        foreign_keys,
    })
}
