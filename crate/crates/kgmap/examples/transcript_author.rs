//! Regenerates a replay transcript from hand-written agent answers.
//!
//! ```text
//! cargo run --example transcript_author -- candidates <vocab.jsonld> <db>
//! cargo run --example transcript_author -- record <vocab.jsonld> <db> <answers.json> <transcript.json>
//! ```
//!
//! `answers.json` holds `{"mapping": {"<table>": {...}}, "relation": {...},
//! "validator": {...}}`. Default settings and the baseline embedder are used,
//! matching `kgmap map` without overrides.

use std::path::Path;

use kgmap::agents::backend::{ChatBackend, RecordingBackend, ScriptedBackend};
use kgmap::agents::pipeline::{map_database, AgentBackends, MapContext, MapSettings};
use kgmap::agents::retrieve::{retrieve_candidates, DEFAULT_K_CLASS, DEFAULT_K_PROP};
use kgmap::embedder::Embedder;
use kgmap::index::{build_index, BuildOptions};
use kgmap::ingest::Database;
use kgmap::vocab::load_vocabulary;
use kgmap_core::embed::DEFAULT_BASELINE_DIMS;
use serde_json::Value as Json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (mode, vocab, db) = match args.as_slice() {
        [mode, vocab, db, ..] => (mode.as_str(), vocab, db),
        _ => return Err("usage: transcript_author candidates|record <vocab> <db> [answers] [out]".into()),
    };
    let parsed = load_vocabulary(Path::new(vocab))?;
    let embedder = Embedder::baseline(DEFAULT_BASELINE_DIMS)?;
    let index = build_index(&parsed.vocabulary, &embedder, BuildOptions::default())?;
    let db = Database::open(Path::new(db))?;
    let settings = MapSettings::default();

    match mode {
        "candidates" => {
            for profile in db.profile_all(settings.sample_rows, None)? {
                let c = retrieve_candidates(&profile, &index, &embedder, DEFAULT_K_CLASS, DEFAULT_K_PROP)?;
                println!("== {}", profile.name);
                for cand in &c.class_candidates {
                    println!("  class {:.4} {}", cand.score, cand.iri);
                }
                for (col, list) in &c.property_candidates {
                    println!("  -- {col}");
                    for cand in list {
                        println!("     {:.4} {}", cand.score, cand.iri);
                    }
                }
            }
        }
        "record" => {
            let [_, _, _, answers, out] = args.as_slice() else {
                return Err("record needs <answers.json> <transcript.json>".into());
            };
            let answers: Json = serde_json::from_str(&std::fs::read_to_string(answers)?)?;
            let scripted = ScriptedBackend::from_fn(move |messages, format| {
                let doc = match format.name {
                    "MappingProposal" => {
                        let user = &messages.get(1)?.content;
                        let table = user.lines().next()?.strip_prefix("Table: ")?;
                        answers["mapping"].get(table)?
                    }
                    "RelationProposal" => &answers["relation"],
                    "ValidationEdits" => &answers["validator"],
                    _ => return None,
                };
                Some(serde_json::to_string(doc).expect("answer serializes"))
            });
            let recorder = RecordingBackend::new(&scripted);
            let ctx = MapContext {
                backends: AgentBackends::uniform(&recorder as &dyn ChatBackend),
                index: &index,
                embedder: &embedder,
                vocabulary: Some(&parsed.vocabulary),
                settings,
                cancel: None,
            };
            let outcome = map_database(&ctx, &db, None)?;
            recorder.transcript().save(Path::new(out))?;
            eprintln!(
                "recorded {} exchanges; final confidence {:?}",
                recorder.transcript().records.len(),
                outcome.mapping.final_confidence
            );
        }
        other => return Err(format!("unknown mode {other}").into()),
    }
    Ok(())
}
