use kgmap_core::confidence::Confidence;
use kgmap_core::mapping::{ColumnAssignment, FkLink, Provenance, SchemaMapping, TableMapping};
use kgmap_core::materialize::{materialize, TableData};
use kgmap_core::profile::{InferredType, Value};
use kgmap_core::rdf::{parse_ntriples, serialize_ntriples, Term, TripleSet};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Db {
    tables: Vec<TableData>,
    mapping: SchemaMapping,
}

fn cell() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        (-5i64..20).prop_map(Value::Integer),
        (-2.0f64..2.0).prop_map(Value::Real),
        "[a-zA-Z \"\\\\é\n\t<>]{0,8}".prop_map(Value::Text),
    ]
}

fn inferred() -> impl Strategy<Value = InferredType> {
    prop::sample::select(vec![
        InferredType::Integer,
        InferredType::Real,
        InferredType::Text,
        InferredType::Date,
        InferredType::Boolean,
        InferredType::Unknown,
    ])
}

/// Each table has an integer `id` (sometimes duplicated or NULL), a `ref`
/// column pointing into another table, and up to four data columns.
fn database() -> impl Strategy<Value = Db> {
    let table = (
        0usize..4,
        prop::collection::vec((prop::option::of("[a-z]{1,6}"), inferred()), 0..4),
        0usize..12,
        any::<bool>(),
    );
    prop::collection::vec(table, 1..4)
        .prop_flat_map(|specs| {
            let n = specs.len();
            let rows: Vec<_> = specs
                .iter()
                .map(|(_, cols, nrows, _)| {
                    prop::collection::vec(
                        (
                            prop::option::of(0i64..8),
                            prop::option::of(0i64..10),
                            prop::collection::vec(cell(), cols.len()),
                        ),
                        *nrows,
                    )
                })
                .collect();
            (Just(specs), rows, prop::collection::vec((0..n, 0..n), 0..3))
        })
        .prop_map(|(specs, rows, fks)| {
            let mut tables = Vec::new();
            let mut tms = Vec::new();
            for (i, ((_, cols, _, keyed), rows)) in specs.iter().zip(rows).enumerate() {
                let name = format!("t{i}");
                let mut columns = vec!["id".to_string(), "ref".to_string()];
                columns.extend((0..cols.len()).map(|j| format!("c{j}")));
                tables.push(TableData {
                    name: name.clone(),
                    columns: columns.clone(),
                    rows: rows
                        .into_iter()
                        .map(|(id, r, data)| {
                            let mut row = vec![
                                id.map_or(Value::Null, Value::Integer),
                                r.map_or(Value::Null, Value::Integer),
                            ];
                            row.extend(data);
                            row
                        })
                        .collect(),
                });
                let mut assignments = vec![
                    ColumnAssignment {
                        column: "id".into(),
                        property_iri: None,
                        confidence: Confidence::High,
                        inferred_type: InferredType::Integer,
                    },
                    ColumnAssignment {
                        column: "ref".into(),
                        property_iri: None,
                        confidence: Confidence::High,
                        inferred_type: InferredType::Integer,
                    },
                ];
                assignments.extend(cols.iter().enumerate().map(|(j, (p, ty))| ColumnAssignment {
                    column: format!("c{j}"),
                    property_iri: p.as_ref().map(|p| format!("https://schema.org/{p}")),
                    confidence: Confidence::Medium,
                    inferred_type: *ty,
                }));
                tms.push(TableMapping {
                    table: name,
                    class_iri: "https://schema.org/Thing".into(),
                    confidence: Confidence::Medium,
                    primary_key: if *keyed { vec!["id".into()] } else { vec![] },
                    columns: assignments,
                });
            }
            let fk_links = fks
                .into_iter()
                .map(|(from, to)| FkLink {
                    from_table: format!("t{from}"),
                    from_column: "ref".into(),
                    to_table: format!("t{to}"),
                    to_column: "id".into(),
                    predicate: "http://example.org/kg/ns#ref_ref".into(),
                    confidence: Confidence::High,
                })
                .collect();
            Db {
                tables,
                mapping: SchemaMapping {
                    db_id: "random".into(),
                    tables: tms,
                    fk_links,
                    relation_confidence: Confidence::High,
                    final_confidence: Some(Confidence::High),
                    provenance: Provenance::default(),
                },
            }
        })
}

/// Σ rows × (1 + mapped non-null cells) + foreign key values with a target.
fn expected_count(db: &Db) -> usize {
    let mut n = 0;
    for (t, tm) in db.tables.iter().zip(&db.mapping.tables) {
        let mapped: Vec<usize> = tm
            .columns
            .iter()
            .filter(|c| c.property_iri.is_some())
            .map(|c| t.columns.iter().position(|x| *x == c.column).unwrap())
            .collect();
        for row in &t.rows {
            n += 1 + mapped.iter().filter(|&&i| !row[i].is_null()).count();
        }
    }
    for link in &db.mapping.fk_links {
        let from = db.tables.iter().find(|t| t.name == link.from_table).unwrap();
        let to = db.tables.iter().find(|t| t.name == link.to_table).unwrap();
        let ids: Vec<&Value> = to.rows.iter().map(|r| &r[0]).filter(|v| !v.is_null()).collect();
        n += from
            .rows
            .iter()
            .filter(|r| !r[1].is_null() && ids.contains(&&r[1]))
            .count();
    }
    n
}

fn sorted(ts: &TripleSet) -> Vec<kgmap_core::rdf::Triple> {
    let mut v = ts.triples.clone();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn triple_count_formula(db in database()) {
        let (ts, report) = materialize(&db.tables, &db.mapping, "http://example.org/kg/").unwrap();
        prop_assert_eq!(ts.len(), expected_count(&db));
        prop_assert_eq!(report.triples as usize, ts.len());
        prop_assert_eq!(report.type_triples + report.literal_triples + report.link_triples, report.triples);
    }

    #[test]
    fn ntriples_round_trip(db in database()) {
        let (ts, _) = materialize(&db.tables, &db.mapping, "http://example.org/kg").unwrap();
        let text = serialize_ntriples(&ts);
        let back = parse_ntriples(&text).unwrap();
        prop_assert_eq!(sorted(&back), sorted(&ts));
        prop_assert_eq!(serialize_ntriples(&back), text);
    }

    #[test]
    fn literals_survive_serialization(value in "\\PC{0,20}", lang in prop::option::of(Just("http://www.w3.org/2001/XMLSchema#string"))) {
        let mut ts = TripleSet::default();
        ts.push("http://example.org/s".into(), "http://example.org/p", Term::literal(value, lang));
        let back = parse_ntriples(&serialize_ntriples(&ts)).unwrap();
        prop_assert_eq!(back, ts);
    }
}
