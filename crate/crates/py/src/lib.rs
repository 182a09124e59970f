//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists, built by round-tripping through JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use courtside::config::PipelineConfig;
use courtside::enricher::{self, Article, BackgroundTemplates, EnrichPolicy};
use courtside::ingest::{self, BroadcastFormat};
use courtside::kee::{self, KeeConfig, ScoreSeries};
use courtside::kg::{self, EntityClass};
use courtside::kgc;
use courtside::pipeline;
use courtside::rouge::{self, Metric};
use courtside::templater::{self, Draft, Template, TemplateLibrary, WriteConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(value_error)
}

fn class_of(name: &str) -> PyResult<EntityClass> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_uppercase()))
        .map_err(|_| value_error(format!("unknown entity class {name:?}")))
}

/// A parsed play-by-play log.
#[pyclass(name = "GameLog", module = "courtside", frozen)]
struct PyGameLog {
    inner: ingest::GameLog,
}

#[pymethods]
impl PyGameLog {
    #[staticmethod]
    fn from_csv(text: &str, home_team: &str) -> PyResult<Self> {
        let inner = ingest::parse_broadcast(text.as_bytes(), BroadcastFormat::Csv, home_team)
            .map_err(value_error)?;
        Ok(PyGameLog { inner })
    }

    #[staticmethod]
    fn from_jsonl(text: &str, home_team: &str) -> PyResult<Self> {
        let inner = ingest::parse_broadcast(text.as_bytes(), BroadcastFormat::JsonLines, home_team)
            .map_err(value_error)?;
        Ok(PyGameLog { inner })
    }

    /// Reads a CSV or JSON-lines file; the format follows the extension.
    #[staticmethod]
    #[pyo3(signature = (path, home_team, game_id=None))]
    fn read(path: PathBuf, home_team: &str, game_id: Option<&str>) -> PyResult<Self> {
        let inner = pipeline::read_log(&path, home_team, game_id).map_err(PyIOError::new_err)?;
        Ok(PyGameLog { inner })
    }

    #[getter]
    fn game_id(&self) -> &str {
        &self.inner.game_id
    }

    #[getter]
    fn home_team(&self) -> &str {
        &self.inner.home_team
    }

    #[getter]
    fn away_team(&self) -> &str {
        &self.inner.away_team
    }

    /// (home, away) after the last play.
    #[getter]
    fn final_score(&self) -> (u32, u32) {
        self.inner.final_score()
    }

    fn events<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.events)
    }

    fn swapped(&self) -> Self {
        PyGameLog {
            inner: self.inner.swapped(),
        }
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        ingest::write_broadcast(&self.inner, BroadcastFormat::Csv, &mut buf)
            .map_err(value_error)?;
        String::from_utf8(buf).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.events.len()
    }

    fn __repr__(&self) -> String {
        let (h, a) = self.inner.final_score();
        format!(
            "GameLog({:?}, {} {h} : {a} {}, {} events)",
            self.inner.game_id,
            self.inner.home_team,
            self.inner.away_team,
            self.inner.events.len()
        )
    }
}

/// The in-memory knowledge graph store.
#[pyclass(name = "KnowledgeGraph", module = "courtside")]
struct PyKnowledgeGraph {
    inner: kg::KnowledgeGraph,
}

#[pymethods]
impl PyKnowledgeGraph {
    #[new]
    fn new() -> Self {
        PyKnowledgeGraph {
            inner: kg::KnowledgeGraph::default(),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = kg::KnowledgeGraph::load(&path).map_err(value_error)?;
        Ok(PyKnowledgeGraph { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = kg::KnowledgeGraph::from_json(text).map_err(value_error)?;
        Ok(PyKnowledgeGraph { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn entity<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Option<Bound<'py, PyAny>>> {
        self.inner.entity(id).map(|e| to_py(py, e)).transpose()
    }

    /// Id of the entity a name or alias refers to, if any.
    fn resolve(&self, class: &str, surface: &str) -> PyResult<Option<String>> {
        Ok(self
            .inner
            .resolve(class_of(class)?, surface)
            .map(|e| e.id.clone()))
    }

    fn roster(&self, team: &str) -> PyResult<Vec<String>> {
        let r = self.inner.roster(team).map_err(value_error)?;
        Ok(r.into_iter().map(|e| e.id.clone()).collect())
    }

    /// (leaders, star players) of a team, as ids.
    fn leaders(&self, team: &str) -> PyResult<(Vec<String>, Vec<String>)> {
        let (l, s) = self.inner.leaders(team).map_err(value_error)?;
        let ids = |v: Vec<&kg::Entity>| v.into_iter().map(|e| e.id.clone()).collect();
        Ok((ids(l), ids(s)))
    }

    fn head_to_head(&self, team_a: &str, team_b: &str) -> PyResult<Vec<String>> {
        let g = self
            .inner
            .head_to_head(team_a, team_b)
            .map_err(value_error)?;
        Ok(g.into_iter().map(|e| e.id.clone()).collect())
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &kg::validate_schema(&self.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Segments a score-difference series given as (elapsed seconds, dif) points.
#[pyfunction]
fn segment<'py>(py: Python<'py>, points: Vec<(f64, i64)>) -> PyResult<Bound<'py, PyAny>> {
    if points.is_empty() || points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(value_error(
            "points must be non-empty with strictly increasing times",
        ));
    }
    to_py(py, &kee::segment(&ScoreSeries::from_points(&points)))
}

#[pyfunction]
#[pyo3(signature = (log, whole_game=false))]
fn analyze<'py>(py: Python<'py>, log: &PyGameLog, whole_game: bool) -> PyResult<Bound<'py, PyAny>> {
    let config = KeeConfig {
        whole_game,
        ..KeeConfig::default()
    };
    let a = kee::analyze(&log.inner, &config, None).map_err(value_error)?;
    to_py(py, &a)
}

#[pyfunction]
#[pyo3(signature = (log, seed=42, whole_game=false, events_per_segment=2))]
fn compose_draft<'py>(
    py: Python<'py>,
    log: &PyGameLog,
    seed: u64,
    whole_game: bool,
    events_per_segment: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = KeeConfig {
        whole_game,
        ..KeeConfig::default()
    };
    let a = kee::analyze(&log.inner, &config, None).map_err(value_error)?;
    let write = WriteConfig { events_per_segment };
    let draft = templater::compose_draft(
        &log.inner,
        &a.scopes,
        &a.key_events,
        &TemplateLibrary::bundled(),
        &write,
        seed,
    )
    .map_err(value_error)?;
    to_py(py, &draft)
}

/// Fills `[#Slot]` markers; a missing slot raises ValueError.
#[pyfunction]
fn render_template(text: &str, bindings: BTreeMap<String, String>) -> PyResult<String> {
    let t = Template::new("python", "python", text).map_err(value_error)?;
    templater::render(&t, &bindings).map_err(value_error)
}

/// Links a draft (as returned by `compose_draft`) and adds background.
#[pyfunction]
#[pyo3(signature = (draft, kg, threshold=0.85))]
fn enrich<'py>(
    py: Python<'py>,
    draft: &Bound<'py, PyAny>,
    kg: &PyKnowledgeGraph,
    threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let draft: Draft = from_py(draft)?;
    let links = enricher::link_entities(&draft, &kg.inner, threshold);
    let policy = EnrichPolicy {
        similarity_threshold: threshold,
        ..EnrichPolicy::default()
    };
    let article = enricher::enrich(
        &draft,
        &kg.inner,
        &links,
        &policy,
        &BackgroundTemplates::bundled(),
    )
    .map_err(value_error)?;
    to_py(py, &article)
}

/// Problems the no-fabrication audit finds in an article; empty when clean.
#[pyfunction]
fn audit<'py>(
    py: Python<'py>,
    article: &Bound<'py, PyAny>,
    kg: &PyKnowledgeGraph,
) -> PyResult<Bound<'py, PyAny>> {
    let article: Article = from_py(article)?;
    to_py(
        py,
        &enricher::audit(&article, &kg.inner, &BackgroundTemplates::bundled()),
    )
}

#[pyfunction]
fn article_html(article: &Bound<'_, PyAny>) -> PyResult<String> {
    let article: Article = from_py(article)?;
    Ok(enricher::to_html(&article))
}

#[pyfunction]
fn name_similarity(a: &str, b: &str) -> f64 {
    enricher::name_similarity(a, b)
}

/// (precision, recall, f1) for one metric: an n-gram order or "L".
#[pyfunction]
#[pyo3(signature = (candidate, reference, metric="1"))]
fn rouge_score(candidate: &str, reference: &str, metric: &str) -> PyResult<(f64, f64, f64)> {
    let m: Metric = metric.parse().map_err(value_error)?;
    let s = m
        .score(&rouge::tokenize(candidate), &rouge::tokenize(reference))
        .map_err(value_error)?;
    Ok((s.precision, s.recall, s.f1))
}

#[pyfunction]
#[pyo3(signature = (pairs, metrics="1,2,L"))]
fn evaluate_corpus<'py>(
    py: Python<'py>,
    pairs: Vec<(String, String)>,
    metrics: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let metrics = Metric::parse_list(metrics).map_err(value_error)?;
    to_py(
        py,
        &rouge::evaluate_corpus(&pairs, &metrics).map_err(value_error)?,
    )
}

/// Runs the whole pipeline from a TOML config file. Returns the article, its
/// HTML page and the run report. With `out_dir`, the output files are
/// written there too.
#[pyfunction]
#[pyo3(signature = (config, seed=None, out_dir=None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config: PathBuf,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut c = PipelineConfig::load(&config).map_err(value_error)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    let write = out_dir.is_some();
    c.paths.out_dir = out_dir;
    let out = if write {
        pipeline::run_pipeline(&c).map(|(o, _)| o)
    } else {
        pipeline::run(&c)
    }
    .map_err(value_error)?;
    let result = serde_json::json!({
        "article": out.article,
        "html": out.article_html(),
        "report": out.report,
    });
    to_py(py, &result)
}

/// Analytic against finite-difference gradients on the small fixture model.
#[pyfunction]
#[pyo3(signature = (seed=7, epsilon=1e-5))]
fn grad_check<'py>(py: Python<'py>, seed: u64, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let (p, emb, task) = kgc::gradcheck_fixture(seed);
    to_py(
        py,
        &kgc::grad_check(&p, &emb, &task, epsilon).map_err(value_error)?,
    )
}

#[pymodule(name = "courtside")]
fn courtside_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGameLog>()?;
    m.add_class::<PyKnowledgeGraph>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(compose_draft, m)?)?;
    m.add_function(wrap_pyfunction!(render_template, m)?)?;
    m.add_function(wrap_pyfunction!(enrich, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(article_html, m)?)?;
    m.add_function(wrap_pyfunction!(name_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_score, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(grad_check, m)?)?;
    Ok(())
}
