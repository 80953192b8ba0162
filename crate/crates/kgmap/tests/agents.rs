use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::OnceLock;

use kgmap::agents::backend::{
    request_digest, ChatBackend, ChatMessage, ReplayBackend, Role, ScriptedBackend, Transcript, TranscriptRecord,
};
use kgmap::agents::pipeline::{map_database, AgentBackends, MapContext, MapSettings};
use kgmap::agents::prompt::mapping_format;
use kgmap::agents::retrieve::{retrieve_candidates, CandidateSet};
use kgmap::agents::run::{run_mapping_agent, run_relation_agent, run_validator_agent};
use kgmap::embedder::Embedder;
use kgmap::index::{build_index, BuildOptions};
use kgmap::ingest::Database;
use kgmap::vocab::{load_vocabulary, ParsedVocabulary};
use kgmap::Error;
use kgmap_core::confidence::Confidence;
use kgmap_core::profile::TableProfile;
use kgmap_core::vstore::VectorIndex;
use serde_json::json;

struct World {
    vocab: ParsedVocabulary,
    index: VectorIndex,
    embedder: Embedder,
    profiles: Vec<TableProfile>,
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(|| {
        let vocab = load_vocabulary(&root().join("fixtures/vocab/schemaorg-12.0-current-https.jsonld")).unwrap();
        let embedder = Embedder::baseline(512).unwrap();
        let index = build_index(&vocab.vocabulary, &embedder, BuildOptions::default()).unwrap();
        let db = Database::open(&root().join("fixtures/spider/database/movie_rental")).unwrap();
        let profiles = db.profile_all(5, None).unwrap();
        World {
            vocab,
            index,
            embedder,
            profiles,
        }
    })
}

fn movies() -> (&'static TableProfile, CandidateSet) {
    let w = world();
    let p = w.profiles.iter().find(|p| p.name == "movies").unwrap();
    (p, retrieve_candidates(p, &w.index, &w.embedder, 10, 15).unwrap())
}

fn movies_answer(title_property: &str) -> String {
    json!({
        "table": "movies",
        "class_iri": "https://schema.org/MovieSeries",
        "class_confidence": "MEDIUM",
        "columns": [
            {"column": "release_year", "property_iri": null, "confidence": "LOW", "rationale": "years"},
            {"column": "id", "property_iri": null, "confidence": "LOW", "rationale": "key"},
            {"column": "title", "property_iri": title_property, "confidence": "HIGH", "rationale": "titles"}
        ]
    })
    .to_string()
}

#[test]
fn title_column_gets_a_title_or_name_candidate() {
    let (_, c) = movies();
    let labels: Vec<&str> = c
        .for_column("title")
        .iter()
        .map(|c| c.iri.rsplit('/').next().unwrap())
        .collect();
    assert_eq!(labels.len(), 15);
    assert!(labels
        .iter()
        .any(|l| l.to_lowercase().contains("title") || l.to_lowercase().contains("name")));
}

#[test]
fn malformed_then_valid_answer_retries_once() {
    let (p, c) = movies();
    let backend = ScriptedBackend::new(["{\"table\": \"movies\", ", &movies_answer("https://schema.org/title")]);
    let run = run_mapping_agent(&backend, p, &c, 3).unwrap();
    assert_eq!(run.retry_count, 1);
    // columns come back in table order
    let cols: Vec<&str> = run.output.columns.iter().map(|c| c.column.as_str()).collect();
    assert_eq!(cols, ["id", "title", "release_year"]);
    let requests = backend.requests();
    assert_eq!(requests.len(), 2);
    let roles: Vec<Role> = requests[1].iter().map(|m| m.role).collect();
    assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
    assert_eq!(requests[1][2].content, "{\"table\": \"movies\", ");
}

#[test]
fn three_malformed_answers_fail() {
    let (p, c) = movies();
    let backend = ScriptedBackend::new(["nope", "[]", "{\"table\": 3}"]);
    match run_mapping_agent(&backend, p, &c, 3) {
        Err(Error::AgentOutputInvalid { agent, attempts, .. }) => assert_eq!((agent, attempts), ("mapping", 3)),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(backend.requests().len(), 3);
}

#[test]
fn out_of_candidate_property_is_corrected_once() {
    let (p, c) = movies();
    assert!(!c.has_property("https://schema.org/headline"));
    let backend = ScriptedBackend::new([
        movies_answer("https://schema.org/headline"),
        movies_answer("https://schema.org/title"),
    ]);
    let run = run_mapping_agent(&backend, p, &c, 3).unwrap();
    assert_eq!(run.retry_count, 1);
    assert_eq!(
        run.output.column("title").unwrap().property_iri.as_deref(),
        Some("https://schema.org/title")
    );
    let correction = &backend.requests()[1][3].content;
    assert!(correction.contains("https://schema.org/headline"), "{correction}");
}

#[test]
fn fenced_answer_is_accepted() {
    let (p, c) = movies();
    let backend = ScriptedBackend::new([format!("```json\n{}\n```", movies_answer("https://schema.org/title"))]);
    assert_eq!(run_mapping_agent(&backend, p, &c, 3).unwrap().retry_count, 0);
}

fn proposals() -> Vec<kgmap_core::proposal::MappingProposal> {
    let answers: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("fixtures/transcripts/movie_rental.answers.json")).unwrap(),
    )
    .unwrap();
    world()
        .profiles
        .iter()
        .map(|p| serde_json::from_value(answers["mapping"][&p.name].clone()).unwrap())
        .collect()
}

#[test]
fn relation_agent_drops_foreign_keys_with_unknown_endpoints() {
    let w = world();
    let answer = json!({
        "primary_keys": [{"table": "customers", "columns": ["id"]}, {"table": "movies", "columns": ["id"]}],
        "foreign_keys": [
            {"from_table": "rentals", "from_column": "movie_id", "to_table": "movies", "to_column": "id", "confidence": "HIGH"},
            {"from_table": "rentals", "from_column": "shop_id", "to_table": "shops", "to_column": "id", "confidence": "MEDIUM"}
        ],
        "confidence": "MEDIUM"
    });
    let backend = ScriptedBackend::new([answer.to_string()]);
    let run = run_relation_agent(&backend, "movie_rental", &w.profiles, &proposals(), 3).unwrap();
    assert_eq!(run.retry_count, 0);
    assert_eq!(run.output.relation.foreign_keys.len(), 1);
    assert_eq!(run.output.dropped.len(), 1);
    assert!(run.warnings.iter().any(|w| w.contains("DroppedForeignKey")));
    assert!(run
        .warnings
        .iter()
        .any(|w| w.contains("MissingPrimaryKey") && w.contains("rentals")));
}

#[test]
fn validator_remap_to_unknown_term_is_corrected() {
    let w = world();
    let relation: kgmap_core::proposal::RelationProposal =
        serde_json::from_value(json!({"primary_keys": [], "foreign_keys": [], "confidence": "HIGH"})).unwrap();
    let bad = json!({"edits": [{"kind": "Remap", "target": {"type": "table", "table": "movies"},
                               "replacement": "https://schema.org/Film", "confidence": "HIGH"}],
                     "confidence": "HIGH"});
    let good = json!({"edits": [{"kind": "Remap", "target": {"type": "table", "table": "movies"},
                                "replacement": "https://schema.org/Movie", "confidence": "HIGH"}],
                      "confidence": "HIGH"});
    let backend = ScriptedBackend::new([bad.to_string(), good.to_string()]);
    let run = run_validator_agent(
        &backend,
        "movie_rental",
        &w.profiles,
        &proposals(),
        &relation,
        &w.index,
        3,
    )
    .unwrap();
    assert_eq!(run.retry_count, 1);
    let (_, outcome) = run.output;
    let movies = outcome.proposals.iter().find(|p| p.table == "movies").unwrap();
    assert_eq!(movies.class_iri.as_deref(), Some("https://schema.org/Movie"));
}

#[test]
fn replay_answers_repeated_requests_in_order() {
    let messages = vec![ChatMessage::system("s"), ChatMessage::user("u")];
    let format = mapping_format();
    let digest = request_digest(&messages, &format);
    let record = |r: &str| TranscriptRecord {
        digest: digest.clone(),
        format: format.name.into(),
        response: r.into(),
    };
    let replay = ReplayBackend::new(Transcript::new(vec![record("first"), record("second")]));
    assert_eq!(replay.send(&messages, &format).unwrap(), "first");
    assert_eq!(replay.send(&messages, &format).unwrap(), "second");
    assert!(replay.send(&messages, &format).is_err());
    let other = vec![ChatMessage::system("s"), ChatMessage::user("v")];
    assert_ne!(request_digest(&other, &format), digest);
}

#[test]
fn pipeline_result_does_not_depend_on_concurrency() {
    let w = world();
    let db = Database::open(&root().join("fixtures/spider/database/movie_rental")).unwrap();
    let run = |concurrency: usize| {
        let replay = ReplayBackend::load(&root().join("fixtures/transcripts/movie_rental.json")).unwrap();
        let ctx = MapContext {
            backends: AgentBackends::uniform(&replay),
            index: &w.index,
            embedder: &w.embedder,
            vocabulary: Some(&w.vocab.vocabulary),
            settings: MapSettings {
                concurrency,
                ..MapSettings::default()
            },
            cancel: None,
        };
        map_database(&ctx, &db, None).unwrap()
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.mapping, four.mapping);
    assert_eq!(one.proposals, four.proposals);
    assert_eq!(one.mapping.final_confidence, Some(Confidence::Medium));
}

#[test]
fn cancelled_run_reports_partial_results() {
    let w = world();
    let db = Database::open(&root().join("fixtures/spider/database/movie_rental")).unwrap();
    let backend = ScriptedBackend::new(Vec::<String>::new());
    let cancel = AtomicBool::new(true);
    let ctx = MapContext {
        backends: AgentBackends::uniform(&backend),
        index: &w.index,
        embedder: &w.embedder,
        vocabulary: None,
        settings: MapSettings::default(),
        cancel: Some(&cancel),
    };
    let failure = map_database(&ctx, &db, None).unwrap_err();
    assert!(matches!(failure.error, Error::Interrupted));
    assert_eq!(failure.partial.profiled_tables.len(), 3);
    assert!(backend.requests().is_empty());
}
