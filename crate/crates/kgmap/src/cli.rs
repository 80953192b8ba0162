//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use clap::{Parser, Subcommand};
use kgmap_core::eval::render_report;
use kgmap_core::term::TermKind;

use crate::agents::backend::{ChatBackend, LiveBackend, RecordingBackend, ReplayBackend};
use crate::agents::pipeline::{map_database, AgentBackends, MapContext};
use crate::config::{BackendKind, Overrides, PipelineConfig};
use crate::embedder::Embedder;
use crate::error::Error;
use crate::ingest::{resolve_database_path, Annotations, Database};
use crate::kg::{self, MappingDocument, RunReport};
use crate::{gold, index, vocab};

#[derive(Debug, Parser)]
#[command(
    name = "kgmap",
    version,
    about = "Map relational databases onto Schema.org and materialize a knowledge graph"
)]
pub struct Cli {
    /// Configuration file (TOML); flags take precedence over it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// SQLite file or Spider-style database directory
    #[arg(long, global = true, value_name = "PATH")]
    pub db: Option<PathBuf>,
    /// Vector index file to write (build-index) or read
    #[arg(long, global = true, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Sample rows per table shown to the agents
    #[arg(long = "k-rows", global = true, value_name = "N")]
    pub k_rows: Option<usize>,
    /// Class candidates retrieved per table
    #[arg(long = "k-class", global = true, value_name = "N")]
    pub k_class: Option<usize>,
    /// Property candidates retrieved per column
    #[arg(long = "k-prop", global = true, value_name = "N")]
    pub k_prop: Option<usize>,
    /// Chat backend for the agents
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Transcript file answering the replay backend
    #[arg(long, global = true, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
    /// Write every agent exchange to this transcript file
    #[arg(long, global = true, value_name = "FILE")]
    pub record: Option<PathBuf>,
    /// Also write the N-Triples graph after mapping
    #[arg(long, global = true)]
    pub materialize: bool,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for any randomized step (the baseline and replay paths use none)
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the vocabulary and write the vector index
    BuildIndex,
    /// Print table profiles as JSON
    Profile {
        /// Database to use, as an alternative to --db
        #[arg(id = "database", value_name = "DB")]
        db: Option<PathBuf>,
    },
    /// Run the agents and write <db_id>.mapping, .report and .timing
    Map {
        /// Database to use, as an alternative to --db
        #[arg(id = "database", value_name = "DB")]
        db: Option<PathBuf>,
    },
    /// Write <db_id>.nt from an existing mapping
    Materialize {
        /// Database to use, as an alternative to --db
        #[arg(id = "database", value_name = "DB")]
        db: Option<PathBuf>,
    },
    /// Score <db_id>.mapping against <gold_dir>/<db_id>.gold
    Eval {
        /// Database to use, as an alternative to --db
        #[arg(id = "database", value_name = "DB")]
        db: Option<PathBuf>,
    },
    /// Run `map` against the live backend and save a replay transcript
    Record {
        /// Database to use, as an alternative to --db
        #[arg(id = "database", value_name = "DB")]
        db: Option<PathBuf>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            index: self.index.clone(),
            k_rows: self.k_rows,
            k_class: self.k_class,
            k_prop: self.k_prop,
            backend: self.backend,
            transcript: self.transcript.clone(),
            out: self.out.clone(),
            seed: self.seed,
        }
    }

    fn db_path(&self, positional: &Option<PathBuf>) -> Result<PathBuf, Error> {
        match (positional, &self.db) {
            (Some(_), Some(_)) => Err(Error::ConfigInvalid(
                "give the database either as DB or --db, not both".into(),
            )),
            (Some(p), None) | (None, Some(p)) => Ok(p.clone()),
            (None, None) => Err(Error::ConfigInvalid("no database given (DB or --db)".into())),
        }
    }
}

fn db_id_of(path: &Path) -> Result<String, Error> {
    let file = resolve_database_path(path)?;
    Ok(file.file_stem().and_then(|s| s.to_str()).unwrap_or("db").to_string())
}

/// Parses arguments, runs the command and returns the exit status. Errors
/// print one line, `error: <Code>: <message>`, on stderr.
pub fn run<I, T>(args: I, cancel: &AtomicBool, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "error: ConfigInvalid: {first}");
            return 2;
        }
    };
    match dispatch(&cli, cancel, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {}: {msg}", e.code());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, cancel: &AtomicBool, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), &cli.overrides())?;
    let say = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    match &cli.command {
        Command::BuildIndex => {
            let vocab_path = cfg
                .vocabulary
                .as_deref()
                .ok_or_else(|| Error::ConfigInvalid("no vocabulary path configured".into()))?;
            let parsed = vocab::load_vocabulary(vocab_path)?;
            let embedder = Embedder::new(cfg.embedder.clone())?;
            let idx = index::build_index(&parsed.vocabulary, &embedder, cfg.build_options())?;
            if let Some(parent) = cfg.index.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            index::save_index(&idx, &cfg.index)?;
            let classes = idx.entries().filter(|e| e.kind == TermKind::Class).count();
            say(
                out,
                format!(
                    "indexed {} terms ({classes} classes, {} properties) into {}",
                    idx.len(),
                    idx.len() - classes,
                    cfg.index.display()
                ),
            );
            say(
                out,
                format!(
                    "vocabulary: {} active, {} superseded, {} pending, {} unresolved references",
                    parsed.report.active,
                    parsed.report.superseded,
                    parsed.report.pending,
                    parsed.report.unresolved.len()
                ),
            );
            say(out, format!("fingerprint: {}", idx.fingerprint()));
            Ok(())
        }
        Command::Profile { db } => {
            let db = Database::open(&cli.db_path(db)?)?;
            let annotations = load_annotations(&cfg, &db)?;
            let profiles = db.profile_all(cfg.k_rows, annotations.as_ref())?;
            let text = serde_json::to_string_pretty(&profiles).expect("profiles serialize");
            say(out, text);
            Ok(())
        }
        Command::Map { db } => run_map(cli, &cfg, &cli.db_path(db)?, false, cancel, out),
        Command::Record { db } => run_map(cli, &cfg, &cli.db_path(db)?, true, cancel, out),
        Command::Materialize { db } => {
            let db = Database::open(&cli.db_path(db)?)?;
            let doc = kg::read_mapping(&cfg.out_dir, db.db_id())?;
            materialize_and_report(&cfg, &db, &doc, out)
        }
        Command::Eval { db } => {
            let db_id = db_id_of(&cli.db_path(db)?)?;
            let gold = gold::load_gold(&cfg.gold_dir, &db_id)?;
            let doc = kg::read_mapping(&cfg.out_dir, &db_id)?;
            let timing = kg::read_timing(&cfg.out_dir, &db_id);
            let report = gold::evaluate(&doc, &gold, timing.as_ref())?;
            let _ = write!(out, "{}", render_report(&[(db_id.clone(), report.clone())]));
            say(
                out,
                format!(
                    "\nclasses {}/{}, properties {}/{}, foreign keys {}/{}",
                    report.classes.correct,
                    report.classes.count,
                    report.properties.correct,
                    report.properties.count,
                    report.foreign_keys.correct,
                    report.foreign_keys.count
                ),
            );
            let path = kg::output_path(&cfg.out_dir, &db_id, "eval");
            let text = serde_json::to_string_pretty(&report).expect("eval report serializes") + "\n";
            std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(())
        }
    }
}

fn load_annotations(cfg: &PipelineConfig, db: &Database) -> Result<Option<Annotations>, Error> {
    match &cfg.annotations {
        Some(p) => Annotations::load(p).map(Some),
        None => {
            let sidecar = Annotations::sidecar_path(db.path());
            if sidecar.is_file() {
                Annotations::load(&sidecar).map(Some)
            } else {
                Ok(None)
            }
        }
    }
}

fn make_backend(cfg: &PipelineConfig, force_live: bool) -> Result<Box<dyn ChatBackend>, Error> {
    let kind = if force_live {
        BackendKind::Live
    } else {
        cfg.backend.kind
    };
    match kind {
        BackendKind::Replay => {
            let path = cfg
                .backend
                .transcript
                .as_deref()
                .ok_or_else(|| Error::ConfigInvalid("replay backend needs a transcript (--transcript)".into()))?;
            if !path.is_file() {
                return Err(Error::ConfigInvalid(format!(
                    "transcript {} does not exist",
                    path.display()
                )));
            }
            Ok(Box::new(ReplayBackend::load(path)?))
        }
        BackendKind::Live => {
            let live = cfg
                .backend
                .live
                .as_ref()
                .ok_or_else(|| Error::ConfigInvalid("live backend needs [backend] endpoint and model".into()))?;
            Ok(Box::new(LiveBackend::new(
                &live.endpoint,
                &live.model,
                live.api_key_env.as_deref(),
                live.timeout,
            )?))
        }
    }
}

fn run_map(
    cli: &Cli,
    cfg: &PipelineConfig,
    db_path: &Path,
    record: bool,
    cancel: &AtomicBool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let record_path = if record {
        Some(
            cli.record
                .clone()
                .or_else(|| cli.transcript.clone())
                .ok_or_else(|| Error::ConfigInvalid("record needs --record FILE".into()))?,
        )
    } else {
        cli.record.clone()
    };
    let vocab_path = cfg
        .vocabulary
        .as_deref()
        .ok_or_else(|| Error::ConfigInvalid("no vocabulary path configured".into()))?;
    if !cfg.index.is_file() {
        return Err(Error::ConfigInvalid(format!(
            "index {} does not exist; run build-index first",
            cfg.index.display()
        )));
    }
    let db = Database::open(db_path)?;
    let annotations = load_annotations(cfg, &db)?;
    let embedder = Embedder::new(cfg.embedder.clone())?;
    let idx = index::load_index(&cfg.index, Some(&embedder.fingerprint()))?;
    let parsed = vocab::load_vocabulary(vocab_path)?;
    let inner = make_backend(cfg, record)?;
    let recorder = record_path.as_ref().map(|_| RecordingBackend::new(&*inner));
    let backend: &dyn ChatBackend = match &recorder {
        Some(r) => r,
        None => &*inner,
    };
    let ctx = MapContext {
        backends: AgentBackends::uniform(backend),
        index: &idx,
        embedder: &embedder,
        vocabulary: Some(&parsed.vocabulary),
        settings: cfg.map_settings(),
        cancel: Some(cancel),
    };
    let result = map_database(&ctx, &db, annotations.as_ref());
    if let (Some(r), Some(path)) = (&recorder, &record_path) {
        r.transcript().save(path)?;
        let _ = writeln!(out, "transcript: {}", path.display());
    }
    let outcome = match result {
        Ok(o) => o,
        Err(failure) => {
            let path = kg::output_path(&cfg.out_dir, db.db_id(), "partial");
            let text = serde_json::to_string_pretty(&failure.partial).expect("partial serializes") + "\n";
            if std::fs::create_dir_all(&cfg.out_dir).is_ok() && std::fs::write(&path, text).is_ok() {
                let _ = writeln!(out, "partial: {}", path.display());
            }
            return Err(failure.error);
        }
    };
    let doc = MappingDocument::from_outcome(&outcome, idx.fingerprint());
    let mapping_path = kg::write_mapping(&doc, &cfg.out_dir)?;
    kg::write_timing(&outcome.timing, &cfg.out_dir, &outcome.db_id)?;
    let _ = writeln!(out, "mapping: {}", mapping_path.display());
    let _ = writeln!(
        out,
        "tables {}, columns {}, final confidence {}, {:.3} s",
        outcome.timing.tables, outcome.timing.columns, doc.final_confidence, outcome.timing.total_seconds
    );
    if cli.materialize {
        materialize_and_report(cfg, &db, &doc, out)
    } else {
        let report_path = kg::write_report(&RunReport::new(&doc.mapping, None), &cfg.out_dir)?;
        let _ = writeln!(out, "report: {}", report_path.display());
        Ok(())
    }
}

fn materialize_and_report(
    cfg: &PipelineConfig,
    db: &Database,
    doc: &MappingDocument,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let (triples, mreport) = kg::materialize_database(db, &doc.mapping, &cfg.base_iri)?;
    let nt = kg::write_ntriples(&triples, &cfg.out_dir, &doc.db_id)?;
    let report_path = kg::write_report(&RunReport::new(&doc.mapping, Some(mreport.clone())), &cfg.out_dir)?;
    let _ = writeln!(
        out,
        "triples: {} ({} dangling foreign key values) in {}",
        mreport.triples,
        mreport.dangling_fks,
        nt.display()
    );
    let _ = writeln!(out, "report: {}", report_path.display());
    Ok(())
}
