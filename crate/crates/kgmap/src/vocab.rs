//! Reader for the flat-graph JSON-LD form of the Schema.org release.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use kgmap_core::term::{TermKind, TermRecord, TermStatus, Vocabulary, XSD_NS};
use serde::Serialize;
use serde_json::Value as Json;

use crate::error::Error;

const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const SCHEMA_NS: &str = "https://schema.org/";

const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
const SCHEMA_DATATYPE: &str = "https://schema.org/DataType";
const PENDING_SECTION: &str = "https://pending.schema.org";
const ATTIC_SECTION: &str = "https://attic.schema.org";

/// A reference that names no parsed term and no XSD datatype.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct UnresolvedReference {
    pub term: String,
    pub field: &'static str,
    pub target: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub nodes: usize,
    pub classes: usize,
    pub properties: usize,
    /// Nodes that are neither classes nor properties (enumeration members).
    pub skipped_nodes: usize,
    pub active: usize,
    pub superseded: usize,
    pub pending: usize,
    pub unresolved: Vec<UnresolvedReference>,
}

#[derive(Debug)]
pub struct ParsedVocabulary {
    pub vocabulary: Vocabulary,
    pub report: ParseReport,
}

struct Context {
    prefixes: BTreeMap<String, String>,
}

impl Context {
    fn from_document(doc: &Json) -> Self {
        let mut prefixes: BTreeMap<String, String> = [
            ("rdf", RDF_NS),
            ("rdfs", RDFS_NS),
            ("schema", SCHEMA_NS),
            ("xsd", XSD_NS),
        ]
        .into_iter()
        .map(|(p, ns)| (p.to_string(), ns.to_string()))
        .collect();
        if let Some(Json::Object(ctx)) = doc.get("@context") {
            for (prefix, ns) in ctx {
                if let Json::String(ns) = ns {
                    prefixes.insert(prefix.clone(), ns.clone());
                }
            }
        }
        Self { prefixes }
    }

    fn expand(&self, curie: &str) -> String {
        if curie.contains("://") {
            return curie.to_string();
        }
        match curie.split_once(':') {
            Some((prefix, rest)) => match self.prefixes.get(prefix) {
                Some(ns) => format!("{ns}{rest}"),
                None => curie.to_string(),
            },
            None => curie.to_string(),
        }
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedVocabulary(msg.into())
}

/// Every `@id` in a reference value: `{"@id": ..}`, a bare string, or a list.
fn references(value: Option<&Json>, ctx: &Context) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |v: &Json| match v {
        Json::String(s) => out.push(ctx.expand(s)),
        Json::Object(o) => {
            if let Some(Json::String(s)) = o.get("@id") {
                out.push(ctx.expand(s));
            }
        }
        _ => {}
    };
    match value {
        Some(Json::Array(items)) => items.iter().for_each(&mut push),
        Some(v) => push(v),
        None => {}
    }
    out
}

/// The default-language string of a literal value. Untagged and `en`
/// strings count as default; other languages are ignored.
fn default_language_text(value: Option<&Json>) -> Option<String> {
    let pick = |v: &Json| -> Option<String> {
        match v {
            Json::String(s) => Some(s.clone()),
            Json::Object(o) => {
                let lang = o.get("@language").and_then(Json::as_str);
                match (lang, o.get("@value")) {
                    (None | Some("en"), Some(Json::String(s))) => Some(s.clone()),
                    _ => None,
                }
            }
            _ => None,
        }
    };
    match value? {
        Json::Array(items) => items.iter().find_map(pick),
        v => pick(v),
    }
}

fn expanded_field<'a>(node: &'a serde_json::Map<String, Json>, ctx: &Context, iri: &str) -> Option<&'a Json> {
    node.iter().find(|(k, _)| ctx.expand(k) == iri).map(|(_, v)| v)
}

/// Parses a release document. Unresolvable references are kept on the
/// records and listed in the report; they never fail the parse.
pub fn parse_vocabulary(text: &str) -> Result<ParsedVocabulary, Error> {
    let doc: Json = serde_json::from_str(text).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let ctx = Context::from_document(&doc);
    let nodes = match &doc {
        Json::Array(nodes) => nodes,
        Json::Object(o) => match o.get("@graph") {
            Some(Json::Array(nodes)) => nodes,
            _ => return Err(malformed("missing @graph node array")),
        },
        _ => return Err(malformed("document is neither an object nor an array")),
    };

    let label_key = format!("{RDFS_NS}label");
    let comment_key = format!("{RDFS_NS}comment");
    let sub_class = format!("{RDFS_NS}subClassOf");
    let sub_property = format!("{RDFS_NS}subPropertyOf");
    let domain_key = format!("{SCHEMA_NS}domainIncludes");
    let range_key = format!("{SCHEMA_NS}rangeIncludes");
    let superseded_key = format!("{SCHEMA_NS}supersededBy");
    let part_of_key = format!("{SCHEMA_NS}isPartOf");

    let mut report = ParseReport {
        nodes: nodes.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut datatype_roots = BTreeSet::new();
    for (i, node) in nodes.iter().enumerate() {
        let Json::Object(node) = node else {
            return Err(malformed(format!("node {i} is not an object")));
        };
        let id = match node.get("@id") {
            Some(Json::String(id)) if !id.is_empty() => ctx.expand(id),
            _ => return Err(malformed(format!("node {i} has no @id"))),
        };
        let types = references(node.get("@type"), &ctx);
        let kind = if types.iter().any(|t| t == RDFS_CLASS) {
            TermKind::Class
        } else if types.iter().any(|t| t == RDF_PROPERTY) {
            TermKind::Property
        } else {
            report.skipped_nodes += 1;
            continue;
        };
        if types.iter().any(|t| t == SCHEMA_DATATYPE) {
            datatype_roots.insert(id.clone());
        }

        let sections = references(expanded_field(node, &ctx, &part_of_key), &ctx);
        let status = if expanded_field(node, &ctx, &superseded_key).is_some()
            || sections.iter().any(|s| s.trim_end_matches('/') == ATTIC_SECTION)
        {
            TermStatus::Superseded
        } else if sections.iter().any(|s| s.trim_end_matches('/') == PENDING_SECTION) {
            TermStatus::Pending
        } else {
            TermStatus::Active
        };

        let label = default_language_text(expanded_field(node, &ctx, &label_key))
            .filter(|l| !l.trim().is_empty())
            .unwrap_or_else(|| kgmap_core::term::local_name(&id).to_string());
        let comment = default_language_text(expanded_field(node, &ctx, &comment_key)).unwrap_or_default();
        let (super_key, domain, range) = match kind {
            TermKind::Class => (&sub_class, Vec::new(), Vec::new()),
            TermKind::Property => (
                &sub_property,
                references(expanded_field(node, &ctx, &domain_key), &ctx),
                references(expanded_field(node, &ctx, &range_key), &ctx),
            ),
        };
        records.push(TermRecord {
            iri: id,
            kind,
            label,
            comment,
            domain_includes: domain,
            range_includes: range,
            super_types: references(expanded_field(node, &ctx, super_key), &ctx),
            status,
            datatype: false,
        });
    }

    // Datatypes are the DataType members plus every class below one of them
    // (URL under Text, Integer under Number, ...).
    let supers: BTreeMap<String, Vec<String>> = records
        .iter()
        .filter(|r| r.kind == TermKind::Class)
        .map(|r| (r.iri.clone(), r.super_types.clone()))
        .collect();
    let mut datatypes = datatype_roots;
    loop {
        let before = datatypes.len();
        for (iri, sup) in &supers {
            if !datatypes.contains(iri) && sup.iter().any(|s| datatypes.contains(s)) {
                datatypes.insert(iri.clone());
            }
        }
        if datatypes.len() == before {
            break;
        }
    }
    for r in &mut records {
        r.datatype = r.kind == TermKind::Class && datatypes.contains(&r.iri);
    }

    let known: BTreeSet<&str> = records.iter().map(|r| r.iri.as_str()).collect();
    let mut unresolved = Vec::new();
    for r in &records {
        let fields: [(&'static str, &Vec<String>); 3] = [
            ("super_types", &r.super_types),
            ("domain_includes", &r.domain_includes),
            ("range_includes", &r.range_includes),
        ];
        for (field, targets) in fields {
            for t in targets {
                if !known.contains(t.as_str()) && !t.starts_with(XSD_NS) {
                    unresolved.push(UnresolvedReference {
                        term: r.iri.clone(),
                        field,
                        target: t.clone(),
                    });
                }
            }
        }
    }
    unresolved.sort();
    report.unresolved = unresolved;

    let vocabulary = Vocabulary::new(records).map_err(|e| malformed(e.to_string()))?;
    report.classes = vocabulary.iter().filter(|t| t.kind == TermKind::Class).count();
    report.properties = vocabulary.iter().filter(|t| t.kind == TermKind::Property).count();
    report.active = vocabulary.count_status(TermStatus::Active);
    report.superseded = vocabulary.count_status(TermStatus::Superseded);
    report.pending = vocabulary.count_status(TermStatus::Pending);
    Ok(ParsedVocabulary { vocabulary, report })
}

pub fn load_vocabulary(path: &Path) -> Result<ParsedVocabulary, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vocabulary(&text)
}
