//! Slot templates and draft composition.
//!
//! A template is plain text with `[#Name]` markers (`Name` in
//! `[A-Za-z0-9_]+`). The library groups templates by segment phase, by
//! key-event kind, and by closing-sentence key, and is loaded from TOML:
//!
//! ```toml
//! [[trend]]
//! id = "stalemate-1"
//! phase = "STALEMATE"
//! text = "[#TeamA] and [#TeamB] traded baskets."
//!
//! [[event]]
//! id = "highest-1"
//! kind = "HIGHEST_SCORE"
//! text = "[#Player] poured in [#Scores]."
//!
//! [[closing]]
//! id = "end-1"
//! key = "QUARTER_END_LEAD"
//! text = "[#Leader] led [#Trailer] [#Score] after the [#Quarter] quarter."
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EventCode, GameLog};
use crate::kee::{KeyEvent, KeyEventKind, Phase, Scope, Segmentation};
use crate::kg::{EntityClass, KgError, KnowledgeGraph};
use crate::rng::substream;

pub const BUNDLED_TEMPLATES: &str = include_str!("../data/templates.toml");

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("MALFORMED_MARKER in template `{id}` at byte {offset}")]
    MalformedMarker { id: String, offset: usize },
    #[error("COVERAGE: no template for {0}")]
    Coverage(String),
    #[error("MISSING_SLOT({0:?})")]
    MissingSlot(String),
    #[error("duplicate template id `{0}`")]
    DuplicateId(String),
    #[error("template file: {0}")]
    Parse(String),
    #[error("team `{0}` is not in the knowledge graph")]
    UnknownTeam(String),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Closing-sentence keys.
pub const CLOSING_KEYS: [&str; 4] = [
    "QUARTER_END_LEAD",
    "QUARTER_END_TIED",
    "GAME_END_LEAD",
    "GAME_END_TIED",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionKind {
    Player,
    Team,
}

/// A player or team name inside a paragraph; `start..end` are byte offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: MentionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    /// `None` for paragraphs not tied to a scope, such as player summaries.
    pub scope: Option<String>,
    pub text: String,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub game_id: String,
    pub paragraphs: Vec<Paragraph>,
}

impl Draft {
    pub fn text(&self) -> String {
        self.paragraphs
            .iter()
            .map(|p| p.text.as_str())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    /// Phase, key-event kind or closing key.
    pub applies_to: String,
    pub text: String,
    pub required_slots: BTreeSet<String>,
    /// Source wording kept when `text` was tidied.
    pub original: Option<String>,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn parse_markers<'a>(id: &str, text: &'a str) -> Result<Vec<Piece<'a>>, TemplateError> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut base = 0;
    while let Some(pos) = rest.find("[#") {
        if pos > 0 {
            out.push(Piece::Text(&rest[..pos]));
        }
        let after = &rest[pos + 2..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        if name_len == 0 || !after[name_len..].starts_with(']') {
            return Err(TemplateError::MalformedMarker {
                id: id.to_owned(),
                offset: base + pos,
            });
        }
        out.push(Piece::Slot(&after[..name_len]));
        let consumed = pos + 2 + name_len + 1;
        base += consumed;
        rest = &rest[consumed..];
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    Ok(out)
}

impl Template {
    pub fn new(id: &str, applies_to: &str, text: &str) -> Result<Template, TemplateError> {
        let required_slots = parse_markers(id, text)?
            .into_iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.to_owned()),
                Piece::Text(_) => None,
            })
            .collect();
        Ok(Template {
            id: id.to_owned(),
            applies_to: applies_to.to_owned(),
            text: text.to_owned(),
            required_slots,
            original: None,
        })
    }
}

/// A slot value, optionally recorded as a mention when substituted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub value: String,
    pub kind: Option<MentionKind>,
}

pub type Bindings = BTreeMap<String, Binding>;

fn plain(v: impl Into<String>) -> Binding {
    Binding {
        value: v.into(),
        kind: None,
    }
}

fn named(v: &str, kind: MentionKind) -> Binding {
    Binding {
        value: v.to_owned(),
        kind: Some(kind),
    }
}

/// Substitutes every marker; extra bindings are ignored.
pub fn render(
    template: &Template,
    bindings: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    let b: Bindings = bindings
        .iter()
        .map(|(k, v)| (k.clone(), plain(v.as_str())))
        .collect();
    render_with_mentions(template, &b).map(|(s, _)| s)
}

pub fn render_with_mentions(
    template: &Template,
    bindings: &Bindings,
) -> Result<(String, Vec<Mention>), TemplateError> {
    let mut out = String::with_capacity(template.text.len() + 32);
    let mut mentions = Vec::new();
    for piece in parse_markers(&template.id, &template.text)? {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(name) => {
                let b = bindings
                    .get(name)
                    .ok_or_else(|| TemplateError::MissingSlot(name.to_owned()))?;
                let start = out.len();
                out.push_str(&b.value);
                if let Some(kind) = b.kind {
                    mentions.push(Mention {
                        surface: b.value.clone(),
                        start,
                        end: out.len(),
                        kind,
                    });
                }
            }
        }
    }
    Ok((out, mentions))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrendEntry {
    id: String,
    phase: Phase,
    text: String,
    original: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventEntry {
    id: String,
    kind: KeyEventKind,
    text: String,
    original: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClosingEntry {
    id: String,
    key: String,
    text: String,
    original: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    #[serde(default)]
    trend: Vec<TrendEntry>,
    #[serde(default)]
    event: Vec<EventEntry>,
    #[serde(default)]
    closing: Vec<ClosingEntry>,
}

/// Key-event kinds the extractor can emit.
pub fn emitted_kinds() -> impl Iterator<Item = KeyEventKind> {
    KeyEventKind::ALL.into_iter().filter(|k| {
        !matches!(
            k,
            KeyEventKind::SignificantScore2 | KeyEventKind::SignificantScore3
        )
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLibrary {
    pub trends: BTreeMap<Phase, Vec<Template>>,
    pub events: BTreeMap<KeyEventKind, Vec<Template>>,
    pub closings: BTreeMap<String, Vec<Template>>,
}

impl TemplateLibrary {
    pub fn bundled() -> TemplateLibrary {
        TemplateLibrary::from_toml(BUNDLED_TEMPLATES).expect("bundled templates are valid")
    }

    pub fn load(path: &Path) -> Result<TemplateLibrary, TemplateError> {
        TemplateLibrary::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml(text: &str) -> Result<TemplateLibrary, TemplateError> {
        let file: LibraryFile =
            toml::from_str(text).map_err(|e| TemplateError::Parse(e.to_string()))?;
        let mut ids = BTreeSet::new();
        let mut make = |id: &str, key: &str, text: &str, original: Option<String>| {
            if !ids.insert(id.to_owned()) {
                return Err(TemplateError::DuplicateId(id.to_owned()));
            }
            let mut t = Template::new(id, key, text)?;
            t.original = original;
            Ok(t)
        };
        let mut lib = TemplateLibrary {
            trends: BTreeMap::new(),
            events: BTreeMap::new(),
            closings: BTreeMap::new(),
        };
        for e in file.trend {
            let key = serde_json::to_value(e.phase).expect("phase serializes");
            let t = make(&e.id, key.as_str().unwrap_or_default(), &e.text, e.original)?;
            lib.trends.entry(e.phase).or_default().push(t);
        }
        for e in file.event {
            let t = make(&e.id, e.kind.as_str(), &e.text, e.original)?;
            lib.events.entry(e.kind).or_default().push(t);
        }
        for e in file.closing {
            if !CLOSING_KEYS.contains(&e.key.as_str()) {
                return Err(TemplateError::Parse(format!(
                    "unknown closing key `{}`",
                    e.key
                )));
            }
            let t = make(&e.id, &e.key, &e.text, e.original)?;
            lib.closings.entry(e.key.clone()).or_default().push(t);
        }
        lib.check_coverage()?;
        Ok(lib)
    }

    /// Every phase, every emitted key-event kind and every closing key needs
    /// at least one template.
    pub fn check_coverage(&self) -> Result<(), TemplateError> {
        for p in Phase::ALL {
            if self.trends.get(&p).is_none_or(Vec::is_empty) {
                return Err(TemplateError::Coverage(format!("phase {p:?}")));
            }
        }
        for k in emitted_kinds() {
            if self.events.get(&k).is_none_or(Vec::is_empty) {
                return Err(TemplateError::Coverage(format!("key event {k}")));
            }
        }
        for k in CLOSING_KEYS {
            if self.closings.get(k).is_none_or(Vec::is_empty) {
                return Err(TemplateError::Coverage(format!("closing {k}")));
            }
        }
        Ok(())
    }

    pub fn all(&self) -> impl Iterator<Item = &Template> {
        self.trends
            .values()
            .chain(self.events.values())
            .chain(self.closings.values())
            .flatten()
    }
}

pub fn points_phrase(n: i64) -> String {
    if n == 1 {
        "1 point".to_owned()
    } else {
        format!("{n} points")
    }
}

pub fn ordinal(q: u32) -> String {
    match q {
        1 => "first".into(),
        2 => "second".into(),
        3 => "third".into(),
        4 => "fourth".into(),
        n => format!("{}th", n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WriteConfig {
    /// Key events rendered per segment at most.
    pub events_per_segment: usize,
}

impl Default for WriteConfig {
    fn default() -> Self {
        WriteConfig {
            events_per_segment: 2,
        }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, ts: &'a [Template]) -> &'a Template {
    ts.choose(rng).expect("coverage checked")
}

struct Sentence {
    text: String,
    mentions: Vec<Mention>,
}

fn sentence(t: &Template, b: &Bindings) -> Result<Sentence, TemplateError> {
    let (text, mentions) = render_with_mentions(t, b)?;
    Ok(Sentence { text, mentions })
}

fn join(sentences: Vec<Sentence>) -> (String, Vec<Mention>) {
    let mut text = String::new();
    let mut mentions = Vec::new();
    for s in sentences {
        if s.text.is_empty() {
            continue;
        }
        if !text.is_empty() {
            text.push(' ');
        }
        let off = text.len();
        text.push_str(&s.text);
        mentions.extend(s.mentions.into_iter().map(|m| Mention {
            start: m.start + off,
            end: m.end + off,
            ..m
        }));
    }
    (text, mentions)
}

fn team_bindings(log: &GameLog) -> Bindings {
    let mut b = Bindings::new();
    b.insert("TeamA".into(), named(&log.home_team, MentionKind::Team));
    b.insert("TeamB".into(), named(&log.away_team, MentionKind::Team));
    b
}

fn trend_bindings(log: &GameLog, seg: &Segmentation, start: usize, end: usize) -> Bindings {
    let mut b = team_bindings(log);
    let last = &log.events[seg.series.samples[end].last_event];
    let difs = &seg.series.difs()[start..=end];
    let peak_lead = difs.iter().copied().max().unwrap_or(0).max(0);
    let peak_deficit = (-difs.iter().copied().min().unwrap_or(0)).max(0);
    let margin = (i64::from(last.score_home) - i64::from(last.score_away)).abs();
    b.insert(
        "Score".into(),
        plain(format!("{}:{}", last.score_home, last.score_away)),
    );
    b.insert("Margin".into(), plain(points_phrase(margin)));
    b.insert("PeakLead".into(), plain(points_phrase(peak_lead)));
    b.insert("PeakDeficit".into(), plain(points_phrase(peak_deficit)));
    b.insert("Quarter".into(), plain(scope_word(seg.series.scope)));
    b
}

fn scope_word(scope: Scope) -> String {
    match scope {
        Scope::Quarter(q) => ordinal(q),
        Scope::Game => "game".into(),
    }
}

fn event_bindings(log: &GameLog, e: &KeyEvent) -> Bindings {
    let mut b = team_bindings(log);
    b.insert("Team".into(), named(&e.team, MentionKind::Team));
    b.insert(
        "Opponent".into(),
        named(log.opponent(&e.team), MentionKind::Team),
    );
    if let Some(p) = &e.player {
        b.insert("Player".into(), named(p, MentionKind::Player));
    }
    let play = &log.events[e.event_index];
    b.insert("Scores".into(), plain(points_phrase(e.result)));
    b.insert("Count".into(), plain(e.result.to_string()));
    b.insert(
        "Points".into(),
        plain(points_phrase(i64::from(play.points))),
    );
    b.insert(
        "Score".into(),
        plain(format!("{}:{}", play.score_home, play.score_away)),
    );
    b.insert("Seconds".into(), plain(e.result.to_string()));
    b.insert(
        "Minutes".into(),
        plain(format!("{:.0}", e.result as f64 / 60.0)),
    );
    b
}

/// One paragraph per scope: each segment's trend sentence followed by up to
/// `events_per_segment` of its key events (drawn at random, told in time
/// order), then a closing score sentence.
pub fn compose_draft(
    log: &GameLog,
    scopes: &[Segmentation],
    key_events: &[KeyEvent],
    library: &TemplateLibrary,
    config: &WriteConfig,
    seed: u64,
) -> Result<Draft, TemplateError> {
    library.check_coverage()?;
    let mut rng = substream(seed, "templater");
    let mut paragraphs = Vec::with_capacity(scopes.len());
    for seg in scopes {
        let scope = seg.series.scope;
        let mut sentences = Vec::new();
        for (si, s) in seg.segments.iter().enumerate() {
            let t = pick(&mut rng, &library.trends[&s.phase]);
            sentences.push(sentence(t, &trend_bindings(log, seg, s.start, s.end))?);
            let candidates: Vec<&KeyEvent> = key_events
                .iter()
                .filter(|e| e.scope == scope && e.segment == si)
                .collect();
            let mut chosen: Vec<&KeyEvent> = candidates
                .choose_multiple(&mut rng, config.events_per_segment.min(candidates.len()))
                .copied()
                .collect();
            chosen.sort_by(|a, b| {
                a.time
                    .total_cmp(&b.time)
                    .then_with(|| a.action.cmp(&b.action))
                    .then_with(|| a.player.cmp(&b.player))
            });
            for e in chosen {
                let t = pick(&mut rng, &library.events[&e.action]);
                sentences.push(sentence(t, &event_bindings(log, e))?);
            }
        }
        let end = seg.series.len() - 1;
        let b = trend_bindings(log, seg, 0, end);
        let last = &log.events[seg.series.samples[end].last_event];
        let tied = last.score_home == last.score_away;
        let key = match (scope, tied) {
            (Scope::Quarter(_), false) => "QUARTER_END_LEAD",
            (Scope::Quarter(_), true) => "QUARTER_END_TIED",
            (Scope::Game, false) => "GAME_END_LEAD",
            (Scope::Game, true) => "GAME_END_TIED",
        };
        let mut b = b;
        let (leader, trailer) = if last.score_home >= last.score_away {
            (&log.home_team, &log.away_team)
        } else {
            (&log.away_team, &log.home_team)
        };
        b.insert("Leader".into(), named(leader, MentionKind::Team));
        b.insert("Trailer".into(), named(trailer, MentionKind::Team));
        let t = pick(&mut rng, &library.closings[key]);
        sentences.push(sentence(t, &b)?);
        let (text, mentions) = join(sentences);
        paragraphs.push(Paragraph {
            scope: Some(scope.to_string()),
            text,
            mentions,
        });
    }
    Ok(Draft {
        game_id: log.game_id.clone(),
        paragraphs,
    })
}

/// Points, rebounds and assists credited to one player in a game.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerLine {
    pub points: u32,
    pub rebounds: u32,
    pub assists: u32,
}

impl PlayerLine {
    pub fn is_empty(&self) -> bool {
        self.points == 0 && self.rebounds == 0 && self.assists == 0
    }

    /// "17 points, 13 rebounds and 5 assists", zero counts left out.
    pub fn phrase(&self) -> String {
        let mut parts = Vec::new();
        let mut add = |n: u32, one: &str, many: &str| {
            if n > 0 {
                parts.push(format!("{n} {}", if n == 1 { one } else { many }));
            }
        };
        add(self.points, "point", "points");
        add(self.rebounds, "rebound", "rebounds");
        add(self.assists, "assist", "assists");
        join_and(&parts)
    }
}

fn join_and(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Stat line of every actor of `team` whose name resolves to `player_id`.
pub fn player_line(log: &GameLog, kg: &KnowledgeGraph, team: &str, player_id: &str) -> PlayerLine {
    let mut line = PlayerLine::default();
    for e in log.events.iter().filter(|e| e.team == team) {
        let Some(actor) = e.actor.as_deref() else {
            continue;
        };
        let matches = kg
            .resolve(EntityClass::Player, actor)
            .is_some_and(|p| p.id == player_id);
        if !matches {
            continue;
        }
        if e.event_code.is_scoring() {
            line.points += e.points;
        } else if e.event_code.is_rebound() {
            line.rebounds += 1;
        } else if e.event_code == EventCode::Assist {
            line.assists += 1;
        }
    }
    line
}

/// "On the Lakers side, leader X had ..., star player Y had ..., and Z had
/// ...." The role word appears only when it changes; players with nothing to
/// report are skipped, and an empty paragraph comes back when nobody is left.
pub fn player_summary(
    log: &GameLog,
    kg: &KnowledgeGraph,
    team: &str,
) -> Result<Paragraph, TemplateError> {
    let team_entity = kg
        .resolve(EntityClass::Team, team)
        .ok_or_else(|| TemplateError::UnknownTeam(team.to_owned()))?;
    let (leaders, stars) = kg.leaders(&team_entity.id)?;
    let tagged = leaders
        .iter()
        .map(|p| ("leader", *p))
        .chain(stars.iter().map(|p| ("star player", *p)));
    let mut clauses: Vec<(Option<&str>, String, String)> = Vec::new();
    let mut last_role = None;
    for (role, p) in tagged {
        let line = player_line(log, kg, team, &p.id);
        if line.is_empty() {
            continue;
        }
        let prefix = (last_role != Some(role)).then_some(role);
        last_role = Some(role);
        clauses.push((prefix, p.name().to_owned(), line.phrase()));
    }
    let mut text = String::new();
    let mut mentions = Vec::new();
    if clauses.is_empty() {
        return Ok(Paragraph {
            scope: None,
            text,
            mentions,
        });
    }
    text.push_str("On the ");
    mentions.push(Mention {
        surface: team.to_owned(),
        start: text.len(),
        end: text.len() + team.len(),
        kind: MentionKind::Team,
    });
    text.push_str(team);
    text.push_str(" side, ");
    let n = clauses.len();
    for (i, (prefix, name, stats)) in clauses.into_iter().enumerate() {
        if i > 0 {
            text.push_str(if i + 1 == n { ", and " } else { ", " });
        }
        if let Some(r) = prefix {
            text.push_str(r);
            text.push(' ');
        }
        mentions.push(Mention {
            surface: name.clone(),
            start: text.len(),
            end: text.len() + name.len(),
            kind: MentionKind::Player,
        });
        text.push_str(&name);
        text.push_str(" had ");
        text.push_str(&stats);
    }
    text.push('.');
    Ok(Paragraph {
        scope: None,
        text,
        mentions,
    })
}
