use std::path::{Path, PathBuf};

use kgmap::ingest::{load_gold_schema, Database, GoldForeignKeyRef};
use kgmap::Error;
use kgmap_core::profile::{InferredType, Value};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/spider")
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

#[test]
fn fixture_tables_match_manifest() {
    let db = Database::open(&fixtures().join("database/movie_rental")).unwrap();
    assert_eq!(db.db_id(), "movie_rental");
    let gold = load_gold_schema(&fixtures().join("tables.json"), "movie_rental").unwrap();
    let mut expected = gold.tables.clone();
    expected.sort();
    assert_eq!(db.list_tables().unwrap(), expected);
    for table in &gold.tables {
        let p = db.profile_table(table, 5).unwrap();
        let cols: Vec<&str> = p.columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(cols, gold.columns[table]);
    }
    let declared: Vec<GoldForeignKeyRef> = gold
        .tables
        .iter()
        .flat_map(|t| {
            let p = db.profile_table(t, 0).unwrap();
            p.declared_foreign_keys.into_iter().map(move |fk| GoldForeignKeyRef {
                from_table: t.clone(),
                from_column: fk.column,
                to_table: fk.to_table,
                to_column: fk.to_column,
            })
        })
        .collect();
    assert_eq!(declared, gold.foreign_keys);
}

#[test]
fn fixture_profile_values() {
    let db = Database::open(&fixtures().join("database/movie_rental/movie_rental.sqlite")).unwrap();
    let movies = db.profile_table("movies", 5).unwrap();
    assert_eq!(movies.row_count, 4);
    assert_eq!(movies.sample_rows.len(), 4);
    let year = movies.column("release_year").unwrap();
    assert_eq!(year.inferred_type, InferredType::Integer);
    assert_eq!((year.stats.null_count, year.stats.distinct_count), (1, 3));
    assert_eq!(year.stats.min, Some(Value::Integer(1998)));
    assert_eq!(year.stats.max, Some(Value::Integer(2011)));
    // (1998 + 2004 + 2011) / 3
    assert_eq!(year.stats.mean, Some(2004.3333333333333));
    let customers = db.profile_table("customers", 2).unwrap();
    assert_eq!(customers.sample_rows.len(), 2);
    assert_eq!(customers.declared_primary_key, vec!["id"]);
}

#[test]
fn shop_manifest_foreign_key() {
    let g = load_gold_schema(&fixtures().join("tables.json"), "shop").unwrap();
    assert_eq!(
        g.foreign_keys,
        vec![GoldForeignKeyRef {
            from_table: "orders".into(),
            from_column: "customer_id".into(),
            to_table: "customers".into(),
            to_column: "id".into(),
        }]
    );
    assert!(load_gold_schema(&fixtures().join("tables.json"), "empty_fk")
        .unwrap()
        .foreign_keys
        .is_empty());
    assert!(matches!(
        load_gold_schema(&fixtures().join("tables.json"), "missing"),
        Err(Error::UnknownDbId(_))
    ));
}

fn cell() -> impl Strategy<Value = Option<rusqlite::types::Value>> {
    use rusqlite::types::Value as V;
    prop::option::of(prop_oneof![
        (-50i64..50).prop_map(V::Integer),
        (-10.0f64..10.0).prop_map(V::Real),
        "[a-z0-9 -]{0,150}".prop_map(V::Text),
        "20[0-2][0-9]-0[1-9]-[12][0-9]".prop_map(V::Text),
    ])
}

fn table() -> impl Strategy<Value = (usize, Vec<Vec<Option<rusqlite::types::Value>>>)> {
    (1usize..5).prop_flat_map(|ncols| {
        (
            Just(ncols),
            prop::collection::vec(prop::collection::vec(cell(), ncols), 0..40),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stats_invariants_and_read_only((ncols, rows) in table(), k in 0usize..8) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.sqlite");
        {
            let conn = rusqlite::Connection::open(&path).unwrap();
            let cols: Vec<String> = (0..ncols).map(|i| format!("c{i}")).collect();
            conn.execute_batch(&format!("CREATE TABLE r({});", cols.join(", "))).unwrap();
            let marks = vec!["?"; ncols].join(", ");
            let mut stmt = conn.prepare(&format!("INSERT INTO r VALUES ({marks})")).unwrap();
            for row in &rows {
                let vals: Vec<rusqlite::types::Value> =
                    row.iter().map(|c| c.clone().unwrap_or(rusqlite::types::Value::Null)).collect();
                stmt.execute(rusqlite::params_from_iter(vals)).unwrap();
            }
        }
        let before = digest(&path);
        let db = Database::open(&path).unwrap();
        let p = db.profile_table("r", k).unwrap();
        let again = db.profile_table("r", k).unwrap();
        drop(db);
        prop_assert_eq!(&p, &again);
        prop_assert_eq!(digest(&path), before);

        prop_assert_eq!(p.row_count, rows.len() as u64);
        prop_assert_eq!(p.sample_rows.len(), k.min(rows.len()));
        for (i, c) in p.columns.iter().enumerate() {
            let s = &c.stats;
            let nulls = rows.iter().filter(|r| r[i].is_none()).count() as u64;
            prop_assert_eq!(s.row_count, p.row_count);
            prop_assert_eq!(s.null_count, nulls);
            prop_assert!(s.distinct_count <= s.row_count - s.null_count);
            prop_assert_eq!(s.distinct_count == 0, s.null_count == s.row_count);
            prop_assert_eq!(s.min.is_none(), s.null_count == s.row_count);
            let top: u64 = s.top_values.iter().map(|t| t.count).sum();
            prop_assert!(top <= s.row_count - s.null_count);
            for w in s.top_values.windows(2) {
                prop_assert!(w[0].count >= w[1].count);
            }
            if let (Some(Value::Integer(lo)), Some(Value::Integer(hi))) = (&s.min, &s.max) {
                prop_assert!(lo <= hi);
            }
            for t in &s.top_values {
                if let Value::Text(v) = &t.value {
                    prop_assert!(v.chars().count() <= 121);
                }
            }
        }
    }
}
