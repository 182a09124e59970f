use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use courtside::config::PipelineConfig;
use courtside::enricher::{self, EnrichPolicy};
use courtside::ingest::{write_broadcast, BroadcastFormat};
use courtside::kee::{self, KeeConfig};
use courtside::kg::{self, EntityClass, GraphData, KnowledgeGraph, Schema, StoreDocument};
use courtside::kgc::{self, Checkpoint, KgcConfig};
use courtside::pipeline::{self, read_log};
use courtside::rouge::{self, Metric};
use courtside::templater::{self, Draft, WriteConfig};

#[derive(Parser)]
#[command(
    name = "courtside",
    version,
    about = "Basketball game stories from play-by-play logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a play-by-play feed and print the normalised log.
    Ingest {
        #[command(flatten)]
        log: LogArgs,
        /// Re-emit as a broadcast feed instead of JSON.
        #[arg(long, value_enum)]
        emit: Option<Emit>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Knowledge graph store.
    Kg {
        #[command(subcommand)]
        command: KgCommand,
    },
    /// Few-shot link prediction.
    Kgc {
        #[command(subcommand)]
        command: KgcCommand,
    },
    /// Trend segmentation and key events.
    Kee {
        #[command(subcommand)]
        command: KeeCommand,
    },
    /// Compose a draft from a log.
    Write {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Knowledge graph used for player summaries.
        #[arg(long)]
        kg: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        events_per_segment: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Link a draft to the knowledge graph and add background sentences.
    Enrich {
        #[arg(long)]
        draft: PathBuf,
        #[arg(long)]
        kg: PathBuf,
        /// `.html` writes the annotated page, anything else JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// ROUGE scores of candidate files against reference files with the same names.
    Rouge {
        #[arg(long, alias = "cand")]
        candidates: PathBuf,
        #[arg(long, alias = "ref")]
        references: PathBuf,
        /// Comma-separated list such as `1,2,L`.
        #[arg(long, default_value = "1,2,L")]
        metrics: String,
        #[arg(long)]
        json: bool,
    },
    /// Full pipeline: ingest, segment, extract, write, enrich.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Jsonl,
}

#[derive(Args)]
struct LogArgs {
    /// Play-by-play feed, CSV (comma or pipe) or JSON lines.
    #[arg(long)]
    log: PathBuf,
    /// Team whose score is the left number of the score column.
    #[arg(long)]
    home: String,
    #[arg(long)]
    game_id: Option<String>,
}

#[derive(Subcommand)]
enum KgCommand {
    /// Build a store from entities, triples and role tags.
    Build {
        #[arg(long)]
        input: Vec<PathBuf>,
        /// Schema JSON; the bundled schema when absent.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report counts and schema violations; exits 1 if any are found.
    Validate {
        #[arg(long)]
        kg: PathBuf,
    },
    Query {
        #[arg(long)]
        kg: PathBuf,
        #[command(subcommand)]
        query: KgQuery,
    },
}

#[derive(Subcommand)]
enum KgQuery {
    /// One entity by id
    Entity {
        id: String,
    },
    /// Entity a name or alias refers to (class: team, player, game)
    Resolve {
        #[arg(value_parser = parse_class)]
        class: EntityClass,
        surface: String,
    },
    /// Players with PLAYS_FOR to a team
    Roster {
        team: String,
    },
    /// Team leaders and star players
    Leaders {
        team: String,
    },
    /// Games between two teams
    HeadToHead {
        team_a: String,
        team_b: String,
    },
    /// Triples touching an entity
    Incident {
        id: String,
    },
}

fn parse_class(s: &str) -> Result<EntityClass, String> {
    match s.to_ascii_uppercase().as_str() {
        "PLAYER" => Ok(EntityClass::Player),
        "TEAM" => Ok(EntityClass::Team),
        "GAME" => Ok(EntityClass::Game),
        _ => Err(format!("unknown class {s:?}")),
    }
}

#[derive(Subcommand)]
enum KgcCommand {
    /// Train on every relation of a store (or on the synthetic cycle).
    Train {
        #[arg(long, required_unless_present = "synthetic")]
        kg: Option<PathBuf>,
        /// Train on a 20-entity successor cycle instead of a store.
        #[arg(long)]
        synthetic: bool,
        /// TOML file with a `[kgc]` section or bare hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank candidate tails for a head under a trained relation.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        relation: String,
        #[arg(long)]
        head: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Compare analytic and finite-difference gradients on a small model.
    Gradcheck {
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum KeeCommand {
    /// Segments and trend labels per scope.
    Segment {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long)]
        whole_game: bool,
    },
    /// Key events per segment.
    Events {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long)]
        whole_game: bool,
        /// Drop players the store places on another team.
        #[arg(long)]
        kg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (TOML). Flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    home: Option<String>,
    #[arg(long)]
    game_id: Option<String>,
    #[arg(long)]
    kg: Option<PathBuf>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    whole_game: bool,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    events_per_segment: Option<usize>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit_text(&s, out)
}

fn emit_text(s: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(s.as_bytes())?;
            Ok(())
        }
    }
}

fn load_log(a: &LogArgs) -> Result<courtside::ingest::GameLog> {
    read_log(&a.log, &a.home, a.game_id.as_deref()).map_err(|e| anyhow!(e))
}

fn load_kg(p: &Path) -> Result<KnowledgeGraph> {
    Ok(KnowledgeGraph::load(p)?)
}

fn kee_config(whole_game: bool) -> KeeConfig {
    KeeConfig {
        whole_game,
        ..KeeConfig::default()
    }
}

#[derive(Serialize)]
struct ScopeOut<'a> {
    scope: String,
    label: kee::TrendLabel,
    key_times: &'a kee::KeyTimes,
    snapped: &'a kee::KeyTimes,
    segments: Vec<SegmentOut>,
}

#[derive(Serialize)]
struct SegmentOut {
    start: usize,
    end: usize,
    start_time: f64,
    end_time: f64,
    phase: kee::Phase,
}

fn scope_out(s: &kee::Segmentation) -> ScopeOut<'_> {
    ScopeOut {
        scope: s.series.scope.to_string(),
        label: s.label,
        key_times: &s.key_times,
        snapped: &s.snapped,
        segments: s
            .segments
            .iter()
            .map(|g| SegmentOut {
                start: g.start,
                end: g.end,
                start_time: s.series.t(g.start),
                end_time: s.series.t(g.end),
                phase: g.phase,
            })
            .collect(),
    }
}

fn kgc_config(path: Option<&Path>) -> Result<KgcConfig> {
    let Some(p) = path else {
        return Ok(KgcConfig::default());
    };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let value: toml::Table =
        toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
    let section = match value.get("kgc") {
        Some(toml::Value::Table(t)) => t.clone(),
        _ => value,
    };
    Ok(section.try_into()?)
}

fn run_kgc(cmd: KgcCommand) -> Result<()> {
    match cmd {
        KgcCommand::Train {
            kg,
            synthetic,
            config,
            epochs,
            lr,
            seed,
            out,
        } => {
            let mut c = kgc_config(config.as_deref())?;
            if let Some(e) = epochs {
                c.epochs = e;
            }
            if let Some(l) = lr {
                c.lr = l;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            let (tasks, entities) = if synthetic {
                let b = kgc::synthetic_cycle(20, c.support_size, 4, 4, c.seed);
                (b.tasks, b.entities)
            } else {
                let store = load_kg(kg.as_deref().expect("clap requires --kg"))?;
                let tasks = kgc::tasks_from_kg(&store, c.support_size, c.seed);
                if tasks.is_empty() {
                    bail!("no relation has more than {} triples", c.support_size);
                }
                (tasks, store.entities().map(|e| e.id.clone()).collect())
            };
            let (params, emb, report) = kgc::fit(&tasks, &entities, &c)?;
            let supports: BTreeMap<_, _> = tasks
                .iter()
                .map(|t| (t.relation.clone(), t.support.clone()))
                .collect();
            Checkpoint::new(&params, &emb, supports).save(&out)?;
            emit_json(&report, None)
        }
        KgcCommand::Predict {
            checkpoint,
            relation,
            head,
            top,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let support =
                ck.supports.get(&relation).cloned().ok_or_else(|| {
                    anyhow!("checkpoint has no support set for relation {relation}")
                })?;
            let candidates: Vec<String> = ck
                .entities
                .iter()
                .filter(|e| **e != head)
                .cloned()
                .collect();
            let (params, emb) = ck.into_model()?;
            let ranked = kgc::rank_tails(&head, &support, &candidates, &params, &emb)?;
            let rows: Vec<_> = ranked
                .into_iter()
                .take(top)
                .map(|(tail, score)| serde_json::json!({"tail": tail, "score": score}))
                .collect();
            emit_json(&rows, None)
        }
        KgcCommand::Gradcheck { eps, seed } => {
            let (params, emb, task) = kgc::gradcheck_fixture(seed);
            let r = kgc::grad_check(&params, &emb, &task, eps)?;
            emit_json(&r, None)?;
            if r.max_rel_error > 1e-4 {
                bail!("max relative error {:.3e} exceeds 1e-4", r.max_rel_error);
            }
            Ok(())
        }
    }
}

fn run_kg(cmd: KgCommand) -> Result<()> {
    match cmd {
        KgCommand::Build { input, schema, out } => {
            let schema = match schema {
                Some(p) => Schema::from_json(&std::fs::read_to_string(&p)?)?,
                None => Schema::bundled(),
            };
            let mut store = KnowledgeGraph::new(schema);
            for p in &input {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                let data: GraphData = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", p.display()))?;
                store
                    .extend(data)
                    .with_context(|| format!("loading {}", p.display()))?;
            }
            store.save(&out)?;
            emit_json(&kg::validate_schema(&store), None)
        }
        KgCommand::Validate { kg: path } => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let doc: StoreDocument = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let report = kg::validate_document(&doc);
            emit_json(&report, None)?;
            if !report.is_valid() {
                bail!("{} schema violations", report.violations.len());
            }
            Ok(())
        }
        KgCommand::Query { kg: path, query } => {
            let store = load_kg(&path)?;
            match query {
                KgQuery::Entity { id } => emit_json(
                    &store.entity(&id).ok_or_else(|| anyhow!("no entity {id}"))?,
                    None,
                ),
                KgQuery::Resolve { class, surface } => emit_json(
                    &store
                        .resolve(class, &surface)
                        .ok_or_else(|| anyhow!("nothing resolves to {surface:?}"))?,
                    None,
                ),
                KgQuery::Roster { team } => emit_json(&store.roster(&team)?, None),
                KgQuery::Leaders { team } => {
                    let (leaders, stars) = store.leaders(&team)?;
                    emit_json(
                        &serde_json::json!({"leaders": leaders, "stars": stars}),
                        None,
                    )
                }
                KgQuery::HeadToHead { team_a, team_b } => {
                    emit_json(&store.head_to_head(&team_a, &team_b)?, None)
                }
                KgQuery::Incident { id } => emit_json(&store.incident(&id), None),
            }
        }
    }
}

fn run_pipeline(a: RunArgs) -> Result<()> {
    let mut c = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let p = &mut c.paths;
    if a.log.is_some() {
        p.log = a.log;
    }
    if a.home.is_some() {
        p.home_team = a.home;
    }
    if a.game_id.is_some() {
        p.game_id = a.game_id;
    }
    if a.kg.is_some() {
        p.kg = a.kg;
    }
    if a.templates.is_some() {
        p.templates = a.templates;
    }
    if a.out_dir.is_some() {
        p.out_dir = a.out_dir;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if a.whole_game {
        c.kee.whole_game = true;
    }
    if let Some(t) = a.threshold {
        c.enrich.similarity_threshold = t;
    }
    if let Some(n) = a.events_per_segment {
        c.write.events_per_segment = n;
    }
    if a.print_config {
        return emit_text(&c.to_toml(), None);
    }
    let (out, written) = pipeline::run_pipeline(&c)?;
    for w in &written {
        log::info!("wrote {}", w.display());
    }
    emit_json(
        &serde_json::json!({
            "game_id": out.report.game_id,
            "outputs": written,
            "scopes": out.report.scopes,
            "key_event_counts": out.report.key_event_counts,
            "links": out.report.links,
            "background_sentences": out.report.background_sentences,
            "audit_findings": out.report.audit_findings,
        }),
        None,
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { log, emit, out } => {
            let game = load_log(&log)?;
            match emit {
                None => emit_json(&game, out.as_deref()),
                Some(kind) => {
                    let format = match kind {
                        Emit::Csv => BroadcastFormat::Csv,
                        Emit::Jsonl => BroadcastFormat::JsonLines,
                    };
                    let mut buf = Vec::new();
                    write_broadcast(&game, format, &mut buf)?;
                    emit_text(&String::from_utf8(buf)?, out.as_deref())
                }
            }
        }
        Command::Kg { command } => run_kg(command),
        Command::Kgc { command } => run_kgc(command),
        Command::Kee { command } => match command {
            KeeCommand::Segment { log, whole_game } => {
                let game = load_log(&log)?;
                let a = kee::analyze(&game, &kee_config(whole_game), None)?;
                let scopes: Vec<_> = a.scopes.iter().map(scope_out).collect();
                emit_json(&scopes, None)
            }
            KeeCommand::Events {
                log,
                whole_game,
                kg,
            } => {
                let game = load_log(&log)?;
                let store = kg.as_deref().map(load_kg).transpose()?;
                let a = kee::analyze(&game, &kee_config(whole_game), store.as_ref())?;
                emit_json(&a.key_events, None)
            }
        },
        Command::Write {
            log,
            templates,
            kg,
            seed,
            events_per_segment,
            out,
        } => {
            let game = load_log(&log)?;
            let lib = pipeline::load_templates(templates.as_deref()).map_err(|e| anyhow!(e))?;
            let analysis = kee::analyze(&game, &KeeConfig::default(), None)?;
            let mut wc = WriteConfig::default();
            if let Some(n) = events_per_segment {
                wc.events_per_segment = n;
            }
            let mut draft = templater::compose_draft(
                &game,
                &analysis.scopes,
                &analysis.key_events,
                &lib,
                &wc,
                seed,
            )?;
            if let Some(p) = kg {
                let store = load_kg(&p)?;
                for team in [&game.home_team, &game.away_team] {
                    let para = templater::player_summary(&game, &store, team)?;
                    if !para.text.is_empty() {
                        draft.paragraphs.push(para);
                    }
                }
            }
            emit_json(&draft, out.as_deref())
        }
        Command::Enrich {
            draft,
            kg,
            out,
            threshold,
        } => {
            let text = std::fs::read_to_string(&draft)
                .with_context(|| format!("reading {}", draft.display()))?;
            let d: Draft = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", draft.display()))?;
            let store = load_kg(&kg)?;
            let mut policy = EnrichPolicy::default();
            if let Some(t) = threshold {
                policy.similarity_threshold = t;
            }
            let bg = enricher::BackgroundTemplates::bundled();
            let links = enricher::link_entities(&d, &store, policy.similarity_threshold);
            let article = enricher::enrich(&d, &store, &links, &policy, &bg)?;
            let html = out
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
            let body = if html {
                enricher::to_html(&article)
            } else {
                enricher::to_json(&article)
            };
            emit_text(&body, out.as_deref())
        }
        Command::Rouge {
            candidates,
            references,
            metrics,
            json,
        } => {
            let metrics = Metric::parse_list(&metrics)?;
            let pairs = rouge::load_pairs(&candidates, &references)?;
            let report = rouge::evaluate_corpus(&pairs, &metrics)?;
            if json {
                emit_json(&report, None)
            } else {
                emit_text(&report.to_table(), None)
            }
        }
        Command::Run(a) => run_pipeline(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
