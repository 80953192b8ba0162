//! The final schema mapping assembled from validated agent outputs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::confidence::Confidence;
use crate::profile::{InferredType, TableProfile};
use crate::proposal::{EditLogEntry, MappingProposal, RelationProposal};
use crate::term::THING_IRI;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnAssignment {
    pub column: String,
    pub property_iri: Option<String>,
    pub confidence: Confidence,
    pub inferred_type: InferredType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMapping {
    pub table: String,
    pub class_iri: String,
    pub confidence: Confidence,
    pub primary_key: Vec<String>,
    pub columns: Vec<ColumnAssignment>,
}

impl TableMapping {
    pub fn column(&self, name: &str) -> Option<&ColumnAssignment> {
        self.columns.iter().find(|c| c.column == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FkLink {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
    /// Predicate linking the referencing row to the referenced one.
    pub predicate: String,
    pub confidence: Confidence,
}

/// Per-stage audit data carried along with the mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Agent calls that needed corrective retries, e.g. `mapping:movies` → 1.
    pub retries: BTreeMap<String, u32>,
    pub edits: Vec<EditLogEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMapping {
    pub db_id: String,
    pub tables: Vec<TableMapping>,
    pub fk_links: Vec<FkLink>,
    /// Overall confidence reported by the relation stage.
    pub relation_confidence: Confidence,
    /// `None` when there was nothing to aggregate (no tables).
    pub final_confidence: Option<Confidence>,
    pub provenance: Provenance,
}

impl SchemaMapping {
    pub fn table(&self, name: &str) -> Option<&TableMapping> {
        self.tables.iter().find(|t| t.table == name)
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    pub fn unmapped_columns(&self) -> usize {
        self.tables
            .iter()
            .flat_map(|t| &t.columns)
            .filter(|c| c.property_iri.is_none())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("inconsistent inputs: {0}")]
pub struct InconsistentInputs(pub String);

/// Generated link predicate for a foreign key whose column has no
/// entity-valued property: `<namespace>ref_<column>`.
pub fn link_predicate(namespace: &str, from_column: &str) -> String {
    format!("{namespace}ref_{}", crate::rdf::percent_encode_name(from_column))
}

/// Merges validated proposals and relations into a [`SchemaMapping`].
///
/// Tables without a class fall back to `Thing`. A foreign key reuses the
/// mapped property of its source column when `has_class_range` says that
/// property points at entities; otherwise a predicate in `link_namespace` is
/// generated.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    db_id: &str,
    proposals: &[MappingProposal],
    relation: &RelationProposal,
    provenance: Provenance,
    profiles: &[TableProfile],
    has_class_range: &dyn Fn(&str) -> bool,
    link_namespace: &str,
    final_confidence: Option<Confidence>,
) -> Result<SchemaMapping, InconsistentInputs> {
    let profiled: BTreeSet<&str> = profiles.iter().map(|p| p.name.as_str()).collect();
    let proposed: BTreeSet<&str> = proposals.iter().map(|p| p.table.as_str()).collect();
    if profiled != proposed || proposals.len() != profiles.len() {
        return Err(InconsistentInputs(format!(
            "profiled tables {profiled:?} differ from proposed tables {proposed:?}"
        )));
    }

    let mut tables = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let proposal = proposals
            .iter()
            .find(|p| p.table == profile.name)
            .expect("table sets checked");
        let mut columns = Vec::with_capacity(profile.columns.len());
        for col in &profile.columns {
            let mut hits = proposal.columns.iter().filter(|c| c.column == col.name);
            let (Some(mapped), None) = (hits.next(), hits.next()) else {
                return Err(InconsistentInputs(format!(
                    "column {}.{} must appear exactly once in the proposal",
                    profile.name, col.name
                )));
            };
            columns.push(ColumnAssignment {
                column: col.name.clone(),
                property_iri: mapped.property_iri.clone(),
                confidence: mapped.confidence,
                inferred_type: col.inferred_type,
            });
        }
        if proposal.columns.len() != profile.columns.len() {
            return Err(InconsistentInputs(format!(
                "proposal for {} names columns that were not profiled",
                profile.name
            )));
        }
        let primary_key = relation
            .primary_key(&profile.name)
            .map(<[String]>::to_vec)
            .unwrap_or_default();
        if let Some(bad) = primary_key.iter().find(|c| profile.column(c).is_none()) {
            return Err(InconsistentInputs(format!(
                "primary key column {}.{bad} does not exist",
                profile.name
            )));
        }
        tables.push(TableMapping {
            table: profile.name.clone(),
            class_iri: proposal.class_iri.clone().unwrap_or_else(|| THING_IRI.into()),
            confidence: proposal.class_confidence,
            primary_key,
            columns,
        });
    }

    let mut fk_links = Vec::with_capacity(relation.foreign_keys.len());
    for fk in &relation.foreign_keys {
        let from = tables.iter().find(|t| t.table == fk.from_table);
        let to = tables.iter().find(|t| t.table == fk.to_table);
        let (Some(from), Some(to)) = (from, to) else {
            return Err(InconsistentInputs(format!(
                "foreign key {}.{} -> {}.{} references an unknown table",
                fk.from_table, fk.from_column, fk.to_table, fk.to_column
            )));
        };
        let Some(from_col) = from.column(&fk.from_column) else {
            return Err(InconsistentInputs(format!(
                "foreign key column {}.{} does not exist",
                fk.from_table, fk.from_column
            )));
        };
        if to.column(&fk.to_column).is_none() {
            return Err(InconsistentInputs(format!(
                "foreign key target {}.{} does not exist",
                fk.to_table, fk.to_column
            )));
        }
        let predicate = match &from_col.property_iri {
            Some(p) if has_class_range(p) => p.clone(),
            _ => link_predicate(link_namespace, &fk.from_column),
        };
        fk_links.push(FkLink {
            from_table: fk.from_table.clone(),
            from_column: fk.from_column.clone(),
            to_table: fk.to_table.clone(),
            to_column: fk.to_column.clone(),
            predicate,
            confidence: fk.confidence,
        });
    }

    Ok(SchemaMapping {
        db_id: db_id.into(),
        tables,
        fk_links,
        relation_confidence: relation.confidence,
        final_confidence,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{profile_rows, ColumnSpec, Value};
    use crate::proposal::{ColumnMapping, ForeignKey, PrimaryKey};
    use alloc::string::ToString;
    use alloc::vec;
    use Confidence::*;

    const NS: &str = "http://example.org/kg/ns#";

    fn profile(name: &str, cols: &[&str]) -> TableProfile {
        let specs: Vec<_> = cols
            .iter()
            .map(|c| ColumnSpec {
                name: c.to_string(),
                declared_type: "TEXT".into(),
            })
            .collect();
        profile_rows(
            name,
            &specs,
            &[cols.iter().map(|c| Value::Text(c.to_string())).collect()],
            5,
        )
    }

    fn proposal(table: &str, cols: &[(&str, Option<&str>)]) -> MappingProposal {
        MappingProposal {
            table: table.into(),
            class_iri: None,
            class_confidence: Medium,
            columns: cols
                .iter()
                .map(|(c, p)| ColumnMapping {
                    column: c.to_string(),
                    property_iri: p.map(|s| s.to_string()),
                    confidence: High,
                    rationale: String::new(),
                })
                .collect(),
        }
    }

    fn relation(fks: Vec<ForeignKey>) -> RelationProposal {
        RelationProposal {
            primary_keys: vec![PrimaryKey {
                table: "customers".into(),
                columns: vec!["id".into()],
            }],
            foreign_keys: fks,
            confidence: High,
        }
    }

    fn fk() -> ForeignKey {
        ForeignKey {
            from_table: "orders".into(),
            from_column: "customer_id".into(),
            to_table: "customers".into(),
            to_column: "id".into(),
            confidence: Medium,
        }
    }

    fn setup(customer_prop: Option<&str>) -> (Vec<TableProfile>, Vec<MappingProposal>) {
        (
            vec![profile("customers", &["id"]), profile("orders", &["customer_id"])],
            vec![
                proposal("customers", &[("id", Some("https://schema.org/identifier"))]),
                proposal("orders", &[("customer_id", customer_prop)]),
            ],
        )
    }

    #[test]
    fn mirrors_proposals_without_fks() {
        let (profiles, proposals) = setup(None);
        let m = assemble(
            "db",
            &proposals,
            &relation(vec![]),
            Provenance::default(),
            &profiles,
            &|_| false,
            NS,
            Some(High),
        )
        .unwrap();
        assert_eq!(m.tables.len(), 2);
        assert_eq!(m.tables[0].class_iri, THING_IRI);
        assert_eq!(m.tables[0].primary_key, vec!["id".to_string()]);
        assert_eq!(
            m.tables[0].columns[0].property_iri.as_deref(),
            Some("https://schema.org/identifier")
        );
        assert!(m.fk_links.is_empty());
        assert_eq!(m.unmapped_columns(), 1);
    }

    #[test]
    fn entity_valued_property_becomes_link_predicate() {
        let (profiles, proposals) = setup(Some("https://schema.org/customer"));
        let m = assemble(
            "db",
            &proposals,
            &relation(vec![fk()]),
            Provenance::default(),
            &profiles,
            &|p| p.ends_with("/customer"),
            NS,
            None,
        )
        .unwrap();
        assert_eq!(m.fk_links[0].predicate, "https://schema.org/customer");
    }

    #[test]
    fn unmapped_fk_column_gets_generated_predicate() {
        let (profiles, proposals) = setup(None);
        let m = assemble(
            "db",
            &proposals,
            &relation(vec![fk()]),
            Provenance::default(),
            &profiles,
            &|_| true,
            NS,
            None,
        )
        .unwrap();
        assert_eq!(m.fk_links[0].predicate, "http://example.org/kg/ns#ref_customer_id");
    }

    #[test]
    fn literal_valued_property_is_not_reused() {
        let (profiles, proposals) = setup(Some("https://schema.org/identifier"));
        let m = assemble(
            "db",
            &proposals,
            &relation(vec![fk()]),
            Provenance::default(),
            &profiles,
            &|_| false,
            NS,
            None,
        )
        .unwrap();
        assert!(m.fk_links[0].predicate.starts_with(NS));
    }

    #[test]
    fn table_mismatch_is_inconsistent() {
        let (profiles, mut proposals) = setup(None);
        proposals[1].table = "invoices".into();
        assert!(assemble(
            "db",
            &proposals,
            &relation(vec![]),
            Provenance::default(),
            &profiles,
            &|_| false,
            NS,
            None
        )
        .is_err());
        let (profiles, mut proposals) = setup(None);
        proposals[1].columns.clear();
        assert!(assemble(
            "db",
            &proposals,
            &relation(vec![]),
            Provenance::default(),
            &profiles,
            &|_| false,
            NS,
            None
        )
        .is_err());
        let (profiles, proposals) = setup(None);
        let mut bad = fk();
        bad.to_column = "nope".into();
        assert!(assemble(
            "db",
            &proposals,
            &relation(vec![bad]),
            Provenance::default(),
            &profiles,
            &|_| false,
            NS,
            None
        )
        .is_err());
    }
}
