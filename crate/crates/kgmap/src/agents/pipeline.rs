//! The table-wise flow: profile, retrieve and map each table, then relation
//! and validation over the whole database.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use kgmap_core::confidence::{aggregate, Confidence};
use kgmap_core::mapping::{assemble, Provenance, SchemaMapping};
use kgmap_core::profile::TableProfile;
use kgmap_core::proposal::{MappingProposal, RelationProposal, ValidationEdits};
use kgmap_core::term::Vocabulary;
use kgmap_core::vstore::VectorIndex;
use serde::{Deserialize, Serialize};

use super::backend::ChatBackend;
use super::retrieve::{retrieve_candidates, CandidateSet, DEFAULT_K_CLASS, DEFAULT_K_PROP};
use super::run::{run_mapping_agent, run_relation_agent, run_validator_agent, DEFAULT_RETRY_BUDGET};
use crate::embedder::Embedder;
use crate::error::Error;
use crate::ingest::{Annotations, Database};

pub const DEFAULT_CONCURRENCY: usize = 4;
pub const DEFAULT_LINK_NAMESPACE: &str = "http://example.org/kg/ns#";

/// One backend per agent role; usually the same one three times.
#[derive(Clone, Copy)]
pub struct AgentBackends<'a> {
    pub mapping: &'a dyn ChatBackend,
    pub relation: &'a dyn ChatBackend,
    pub validator: &'a dyn ChatBackend,
}

impl<'a> AgentBackends<'a> {
    pub fn uniform(backend: &'a dyn ChatBackend) -> Self {
        Self {
            mapping: backend,
            relation: backend,
            validator: backend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapSettings {
    pub sample_rows: usize,
    pub k_class: usize,
    pub k_prop: usize,
    pub retry_budget: u32,
    pub concurrency: usize,
    pub link_namespace: String,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            sample_rows: kgmap_core::profile::DEFAULT_SAMPLE_ROWS,
            k_class: DEFAULT_K_CLASS,
            k_prop: DEFAULT_K_PROP,
            retry_budget: DEFAULT_RETRY_BUDGET,
            concurrency: DEFAULT_CONCURRENCY,
            link_namespace: DEFAULT_LINK_NAMESPACE.into(),
        }
    }
}

/// Wall-clock seconds per stage. Never part of the deterministic outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub tables: u64,
    pub columns: u64,
    pub stages: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

pub struct MapContext<'a> {
    pub backends: AgentBackends<'a>,
    pub index: &'a VectorIndex,
    pub embedder: &'a Embedder,
    /// Used to decide whether a property links to entities. Without it,
    /// every foreign key gets a generated link predicate.
    pub vocabulary: Option<&'a Vocabulary>,
    pub settings: MapSettings,
    pub cancel: Option<&'a AtomicBool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOutcome {
    pub db_id: String,
    pub profiles: Vec<TableProfile>,
    pub candidates: Vec<CandidateSet>,
    /// Mapping agent output, before validation.
    pub proposals: Vec<MappingProposal>,
    /// Relation agent output after endpoint checks, before validation.
    pub relation: RelationProposal,
    pub edits: ValidationEdits,
    pub mapping: SchemaMapping,
    pub timing: Timing,
}

/// What was finished when a run stopped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartialResults {
    pub db_id: String,
    pub stage: String,
    pub profiled_tables: Vec<String>,
    pub proposals: Vec<MappingProposal>,
    pub relation: Option<RelationProposal>,
}

#[derive(Debug)]
pub struct MapFailure {
    pub error: Error,
    pub partial: Box<PartialResults>,
}

impl std::fmt::Display for MapFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (during {})", self.error, self.partial.stage)
    }
}

impl std::error::Error for MapFailure {}

fn check_cancel(cancel: Option<&AtomicBool>) -> Result<(), Error> {
    match cancel {
        Some(flag) if flag.load(Ordering::SeqCst) => Err(Error::Interrupted),
        _ => Ok(()),
    }
}

type TableResult = Result<(CandidateSet, MappingProposal, u32, f64, f64), Error>;

/// Runs the three agent stages over every table of `db`.
///
/// Mapping calls for different tables run on up to `concurrency` threads;
/// outputs are collected in table order, so the result does not depend on
/// scheduling. A database without tables yields an empty mapping whose
/// final confidence is `None`.
pub fn map_database(
    ctx: &MapContext<'_>,
    db: &Database,
    annotations: Option<&Annotations>,
) -> Result<MapOutcome, MapFailure> {
    let started = Instant::now();
    let db_id = db.db_id().to_string();
    let mut partial = PartialResults {
        db_id: db_id.clone(),
        stage: "profile".into(),
        ..Default::default()
    };
    let fail = |error: Error, partial: &PartialResults| MapFailure {
        error,
        partial: Box::new(partial.clone()),
    };
    if ctx.index.fingerprint() != ctx.embedder.fingerprint() {
        return Err(fail(
            Error::ConfigInvalid(format!(
                "index fingerprint {} does not match embedder {}",
                ctx.index.fingerprint(),
                ctx.embedder.fingerprint()
            )),
            &partial,
        ));
    }
    let mut stages = BTreeMap::new();

    let t = Instant::now();
    let profiles = db
        .profile_all(ctx.settings.sample_rows, annotations)
        .map_err(|e| fail(e, &partial))?;
    stages.insert("profile".to_string(), t.elapsed().as_secs_f64());
    partial.profiled_tables = profiles.iter().map(|p| p.name.clone()).collect();

    partial.stage = "mapping".into();
    let results: Vec<Mutex<Option<TableResult>>> = profiles.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = ctx.settings.concurrency.max(1).min(profiles.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(profile) = profiles.get(i) else { break };
                let r = (|| {
                    check_cancel(ctx.cancel)?;
                    let t = Instant::now();
                    let cands = retrieve_candidates(
                        profile,
                        ctx.index,
                        ctx.embedder,
                        ctx.settings.k_class,
                        ctx.settings.k_prop,
                    )?;
                    let retrieve_secs = t.elapsed().as_secs_f64();
                    check_cancel(ctx.cancel)?;
                    let t = Instant::now();
                    let run = run_mapping_agent(ctx.backends.mapping, profile, &cands, ctx.settings.retry_budget)?;
                    Ok((
                        cands,
                        run.output,
                        run.retry_count,
                        retrieve_secs,
                        t.elapsed().as_secs_f64(),
                    ))
                })();
                let failed = r.is_err();
                *results[i].lock().expect("result slot") = Some(r);
                if failed {
                    // stop handing out work; tables already running finish
                    next.store(profiles.len(), Ordering::SeqCst);
                }
            });
        }
    });

    let mut candidates = Vec::with_capacity(profiles.len());
    let mut proposals = Vec::with_capacity(profiles.len());
    let mut provenance = Provenance::default();
    let (mut retrieve_secs, mut mapping_secs) = (0.0, 0.0);
    let mut first_error = None;
    for (profile, slot) in profiles.iter().zip(results) {
        match slot.into_inner().expect("result slot") {
            Some(Ok((cands, proposal, retries, rs, ms))) => {
                if retries > 0 {
                    provenance.retries.insert(format!("mapping:{}", profile.name), retries);
                }
                retrieve_secs += rs;
                mapping_secs += ms;
                candidates.push(cands);
                partial.proposals.push(proposal.clone());
                proposals.push(proposal);
            }
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            None => {}
        }
    }
    if let Some(e) = first_error {
        return Err(fail(e, &partial));
    }
    stages.insert("retrieve".to_string(), retrieve_secs);
    stages.insert("mapping".to_string(), mapping_secs);

    let mut items: Vec<Confidence> = proposals.iter().flat_map(|p| p.confidences()).collect();
    let (relation, edits, validated_proposals, validated_relation) = if profiles.is_empty() {
        let relation = RelationProposal {
            primary_keys: Vec::new(),
            foreign_keys: Vec::new(),
            confidence: Confidence::Low,
        };
        let edits = ValidationEdits {
            edits: Vec::new(),
            confidence: Confidence::Low,
        };
        (relation.clone(), edits, Vec::new(), relation)
    } else {
        partial.stage = "relation".into();
        check_cancel(ctx.cancel).map_err(|e| fail(e, &partial))?;
        let t = Instant::now();
        let rel = run_relation_agent(
            ctx.backends.relation,
            &db_id,
            &profiles,
            &proposals,
            ctx.settings.retry_budget,
        )
        .map_err(|e| fail(e, &partial))?;
        stages.insert("relation".to_string(), t.elapsed().as_secs_f64());
        if rel.retry_count > 0 {
            provenance.retries.insert("relation".into(), rel.retry_count);
        }
        provenance.warnings.extend(rel.warnings);
        let relation = rel.output.relation;
        items.extend(relation.foreign_keys.iter().map(|fk| fk.confidence));
        items.push(relation.confidence);
        partial.relation = Some(relation.clone());

        partial.stage = "validator".into();
        check_cancel(ctx.cancel).map_err(|e| fail(e, &partial))?;
        let t = Instant::now();
        let val = run_validator_agent(
            ctx.backends.validator,
            &db_id,
            &profiles,
            &proposals,
            &relation,
            ctx.index,
            ctx.settings.retry_budget,
        )
        .map_err(|e| fail(e, &partial))?;
        stages.insert("validator".to_string(), t.elapsed().as_secs_f64());
        if val.retry_count > 0 {
            provenance.retries.insert("validator".into(), val.retry_count);
        }
        let (edits, outcome) = val.output;
        items.push(edits.confidence);
        items.extend(edits.edits.iter().filter_map(|e| e.confidence));
        provenance.warnings.extend(outcome.warnings);
        provenance.edits = outcome.log;
        (relation, edits, outcome.proposals, outcome.relation)
    };

    partial.stage = "assemble".into();
    let final_confidence = aggregate(&items).ok();
    let has_class_range = |p: &str| ctx.vocabulary.is_some_and(|v| v.has_class_range(p));
    let mapping = assemble(
        &db_id,
        &validated_proposals,
        &validated_relation,
        provenance,
        &profiles,
        &has_class_range,
        &ctx.settings.link_namespace,
        final_confidence,
    )
    .map_err(|e| fail(e.into(), &partial))?;

    let timing = Timing {
        tables: profiles.len() as u64,
        columns: profiles.iter().map(|p| p.columns.len() as u64).sum(),
        stages,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(MapOutcome {
        db_id,
        profiles,
        candidates,
        proposals,
        relation,
        edits,
        mapping,
        timing,
    })
}
