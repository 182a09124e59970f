//! The full chain: ingest, segment, extract, write, enrich.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::enricher::{self, Article, BackgroundTemplates, LinkMethod};
use crate::ingest::{parse_broadcast_with, BroadcastFormat, BroadcastOptions, GameLog};
use crate::kee::{self, GameAnalysis};
use crate::kg::KnowledgeGraph;
use crate::templater::{self, Draft, TemplateLibrary};

#[derive(Debug, Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn fail(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |message| PipelineError { stage, message }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeSummary {
    pub scope: String,
    pub label: String,
    /// Per segment: `[start, end, phase]` over series samples.
    pub segments: Vec<(usize, usize, String)>,
    pub final_dif: i64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub mentions: usize,
    pub exact: usize,
    pub alias: usize,
    pub similarity: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub game_id: String,
    pub timings: Vec<StageTiming>,
    pub scopes: Vec<ScopeSummary>,
    pub key_event_counts: BTreeMap<String, usize>,
    pub links: LinkStats,
    pub background_sentences: usize,
    pub audit_findings: usize,
    /// The effective configuration, defaults included.
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub log: GameLog,
    pub analysis: GameAnalysis,
    pub draft: Draft,
    pub article: Article,
    pub report: RunReport,
}

impl PipelineOutput {
    pub fn draft_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.draft).expect("draft serializes");
        s.push('\n');
        s
    }

    pub fn article_json(&self) -> String {
        enricher::to_json(&self.article)
    }

    pub fn article_html(&self) -> String {
        enricher::to_html(&self.article)
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }
}

struct Clock {
    timings: Vec<StageTiming>,
    at: Instant,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.to_owned(),
            millis: (now - self.at).as_secs_f64() * 1e3,
        });
        self.at = now;
    }
}

pub fn read_log(path: &Path, home_team: &str, game_id: Option<&str>) -> Result<GameLog, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut opts = BroadcastOptions::new(home_team);
    let default_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    opts = opts.with_game_id(game_id.unwrap_or(&default_id));
    parse_broadcast_with(file, BroadcastFormat::from_path(path), &opts)
        .map_err(|e| format!("{}: {e}", path.display()))
}

pub fn load_templates(path: Option<&Path>) -> Result<TemplateLibrary, String> {
    match path {
        Some(p) => TemplateLibrary::load(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(TemplateLibrary::bundled()),
    }
}

pub fn load_background(path: Option<&Path>) -> Result<BackgroundTemplates, String> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            BackgroundTemplates::from_toml(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
        None => Ok(BackgroundTemplates::bundled()),
    }
}

/// Runs every stage in memory.
pub fn run(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let mut clock = Clock {
        timings: Vec::new(),
        at: Instant::now(),
    };
    config.validate().map_err(|e| PipelineError {
        stage: "config",
        message: e.to_string(),
    })?;
    let paths = &config.paths;

    let ingest = fail("ingest");
    let log_path = paths
        .log
        .as_deref()
        .ok_or_else(|| ingest("no log path".into()))?;
    let home = paths
        .home_team
        .as_deref()
        .ok_or_else(|| ingest("no home team".into()))?;
    let log = read_log(log_path, home, paths.game_id.as_deref()).map_err(&ingest)?;
    clock.lap("ingest");

    let segment = fail("segment");
    let mut scopes = Vec::new();
    for scope in config.kee.scopes(&log) {
        let series = kee::score_diff_series(&log, scope).map_err(|e| segment(e.to_string()))?;
        scopes.push(kee::segment_with(series, &config.kee));
    }
    clock.lap("segment");

    let key_events: Vec<_> = scopes
        .iter()
        .flat_map(|s| kee::extract_key_events(&log, s, &config.kee, None))
        .collect();
    let analysis = GameAnalysis { scopes, key_events };
    clock.lap("extract");

    let write = fail("write");
    let library = load_templates(paths.templates.as_deref()).map_err(&write)?;
    let mut draft = templater::compose_draft(
        &log,
        &analysis.scopes,
        &analysis.key_events,
        &library,
        &config.write,
        config.seed,
    )
    .map_err(|e| write(e.to_string()))?;
    clock.lap("write");

    let enrich = fail("enrich");
    let kg_path = paths
        .kg
        .as_deref()
        .ok_or_else(|| enrich("no knowledge graph path".into()))?;
    let kg =
        KnowledgeGraph::load(kg_path).map_err(|e| enrich(format!("{}: {e}", kg_path.display())))?;
    let background = load_background(paths.background.as_deref()).map_err(&enrich)?;
    for team in [&log.home_team, &log.away_team] {
        match templater::player_summary(&log, &kg, team) {
            Ok(p) if !p.text.is_empty() => draft.paragraphs.push(p),
            Ok(_) => {}
            Err(templater::TemplateError::UnknownTeam(t)) => {
                log::warn!("team {t} is not in the knowledge graph; no player summary")
            }
            Err(e) => return Err(enrich(e.to_string())),
        }
    }
    let links = enricher::link_entities(&draft, &kg, config.enrich.similarity_threshold);
    let article = enricher::enrich(&draft, &kg, &links, &config.enrich, &background)
        .map_err(|e| enrich(e.to_string()))?;
    let findings = enricher::audit(&article, &kg, &background);
    for f in &findings {
        log::warn!(
            "audit: paragraph {} sentence {}: {}",
            f.paragraph,
            f.sentence,
            f.problem
        );
    }
    clock.lap("enrich");

    let mut counts = BTreeMap::new();
    for e in &analysis.key_events {
        *counts.entry(e.action.as_str().to_owned()).or_insert(0) += 1;
    }
    let method_count = |m: LinkMethod| article.links.iter().filter(|l| l.method == m).count();
    let report = RunReport {
        game_id: log.game_id.clone(),
        timings: clock.timings,
        scopes: analysis
            .scopes
            .iter()
            .map(|s| ScopeSummary {
                scope: s.series.scope.to_string(),
                label: serde_json::to_value(s.label)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                segments: s
                    .segments
                    .iter()
                    .map(|g| {
                        let phase = serde_json::to_value(g.phase)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_owned))
                            .unwrap_or_default();
                        (g.start, g.end, phase)
                    })
                    .collect(),
                final_dif: s.series.difs().last().copied().unwrap_or(0),
            })
            .collect(),
        key_event_counts: counts,
        links: LinkStats {
            mentions: article.links.len() + article.unresolved.len(),
            exact: method_count(LinkMethod::Exact),
            alias: method_count(LinkMethod::Alias),
            similarity: method_count(LinkMethod::Similarity),
            unresolved: article.unresolved.len(),
        },
        background_sentences: article.background().count(),
        audit_findings: findings.len(),
        config: config.clone(),
    };
    Ok(PipelineOutput {
        log,
        analysis,
        draft,
        article,
        report,
    })
}

pub const OUTPUT_FILES: [&str; 4] = ["draft.json", "article.json", "article.html", "report.json"];

/// Runs the pipeline and writes [`OUTPUT_FILES`] into the output directory.
/// On any error, files this run already wrote are removed.
pub fn run_pipeline(
    config: &PipelineConfig,
) -> Result<(PipelineOutput, Vec<PathBuf>), PipelineError> {
    let out_dir = config
        .paths
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    // nothing touches the disk until every stage has succeeded
    let output = run(config)?;
    let output_fail = fail("output");
    let contents = [
        output.draft_json(),
        output.article_json(),
        output.article_html(),
        output.report_json(),
    ];
    let mut written = Vec::new();
    let res = (|| {
        std::fs::create_dir_all(&out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
        for (name, body) in OUTPUT_FILES.iter().zip(&contents) {
            let p = out_dir.join(name);
            std::fs::write(&p, body).map_err(|e| format!("{}: {e}", p.display()))?;
            written.push(p);
        }
        Ok::<_, String>(())
    })();
    if let Err(e) = res {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(output_fail(e));
    }
    Ok((output, written))
}
