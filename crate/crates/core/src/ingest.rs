//! Play-by-play ingestion.
//!
//! Turns live-text broadcast rows (`quarter, time, team, description, score`)
//! into a validated [`GameLog`]. Rows are accepted as delimiter-separated text
//! (comma or pipe, sniffed from the first data line) or as JSON lines with the
//! same keys.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_QUARTER_LENGTH: f64 = 720.0;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("row {row}: malformed: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("row {row}: score regression ({prev_home}:{prev_away} -> {home}:{away})")]
    ScoreRegression {
        row: usize,
        prev_home: u32,
        prev_away: u32,
        home: u32,
        away: u32,
    },
    #[error("row {row}: score change does not match event ({reason})")]
    ScoreMismatch { row: usize, reason: String },
    #[error("row {row}: events out of order ({reason})")]
    OutOfOrder { row: usize, reason: String },
    #[error("row {row}: unknown team {team:?}")]
    UnknownTeam { row: usize, team: String },
    #[error("row {row}: {source}")]
    Row { row: usize, source: ClassifyError },
    #[error("clock {clock} exceeds quarter length {quarter_length}")]
    ClockOutOfRange { clock: f64, quarter_length: f64 },
    #[error("invalid quarter {0}")]
    InvalidQuarter(u32),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ClassifyError {
    #[error("unclassified event description {0:?}")]
    Unclassified(String),
}

/// Event classes recognised in a broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventCode {
    #[serde(rename = "MADE_2PT")]
    Made2pt,
    #[serde(rename = "MADE_3PT")]
    Made3pt,
    #[serde(rename = "MADE_FT")]
    MadeFt,
    #[serde(rename = "MISS_2PT")]
    Miss2pt,
    #[serde(rename = "MISS_3PT")]
    Miss3pt,
    RebOff,
    RebDef,
    FoulShooting,
    FoulPersonal,
    FoulOffensive,
    FoulFlagrant,
    FoulTechnical,
    ToBadPass,
    ToOutOfBounds,
    ToLostBall,
    Lineup,
    Timeout,
    /// Not one of the seven broadcast categories; kept so player summaries
    /// can report assists.
    Assist,
}

/// The seven broadcast categories, plus the assist extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCategory {
    Score,
    StrikeIron,
    Rebound,
    Foul,
    Error,
    LineupAdjustment,
    Pause,
    AssistExtension,
}

impl EventCategory {
    pub fn is_extension(self) -> bool {
        matches!(self, EventCategory::AssistExtension)
    }
}

impl EventCode {
    pub const ALL: [EventCode; 18] = [
        EventCode::Made2pt,
        EventCode::Made3pt,
        EventCode::MadeFt,
        EventCode::Miss2pt,
        EventCode::Miss3pt,
        EventCode::RebOff,
        EventCode::RebDef,
        EventCode::FoulShooting,
        EventCode::FoulPersonal,
        EventCode::FoulOffensive,
        EventCode::FoulFlagrant,
        EventCode::FoulTechnical,
        EventCode::ToBadPass,
        EventCode::ToOutOfBounds,
        EventCode::ToLostBall,
        EventCode::Lineup,
        EventCode::Timeout,
        EventCode::Assist,
    ];

    pub fn category(self) -> EventCategory {
        use EventCode::*;
        match self {
            Made2pt | Made3pt | MadeFt => EventCategory::Score,
            Miss2pt | Miss3pt => EventCategory::StrikeIron,
            RebOff | RebDef => EventCategory::Rebound,
            FoulShooting | FoulPersonal | FoulOffensive | FoulFlagrant | FoulTechnical => {
                EventCategory::Foul
            }
            ToBadPass | ToOutOfBounds | ToLostBall => EventCategory::Error,
            Lineup => EventCategory::LineupAdjustment,
            Timeout => EventCategory::Pause,
            Assist => EventCategory::AssistExtension,
        }
    }

    /// Points credited to the acting team.
    pub fn points(self) -> u32 {
        match self {
            EventCode::Made2pt => 2,
            EventCode::Made3pt => 3,
            EventCode::MadeFt => 1,
            _ => 0,
        }
    }

    pub fn is_scoring(self) -> bool {
        self.points() > 0
    }

    pub fn is_miss(self) -> bool {
        matches!(self, EventCode::Miss2pt | EventCode::Miss3pt)
    }

    pub fn is_rebound(self) -> bool {
        matches!(self, EventCode::RebOff | EventCode::RebDef)
    }

    pub fn is_turnover(self) -> bool {
        self.category() == EventCategory::Error
    }
}

impl fmt::Display for EventCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayEvent {
    pub quarter: u32,
    /// Seconds remaining in the quarter.
    pub clock_remaining: f64,
    pub team: String,
    pub event_code: EventCode,
    pub actor: Option<String>,
    pub points: u32,
    pub score_home: u32,
    pub score_away: u32,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameLog {
    pub game_id: String,
    pub home_team: String,
    pub away_team: String,
    pub quarter_length: f64,
    pub events: Vec<PlayEvent>,
}

impl GameLog {
    pub fn empty(home_team: &str) -> Self {
        GameLog {
            game_id: String::new(),
            home_team: home_team.to_owned(),
            away_team: String::new(),
            quarter_length: DEFAULT_QUARTER_LENGTH,
            events: Vec::new(),
        }
    }

    /// Elapsed game time of event `i`.
    pub fn elapsed(&self, i: usize) -> f64 {
        let e = &self.events[i];
        elapsed_unchecked(e.quarter, e.clock_remaining, self.quarter_length)
    }

    pub fn final_score(&self) -> (u32, u32) {
        self.events
            .last()
            .map(|e| (e.score_home, e.score_away))
            .unwrap_or((0, 0))
    }

    pub fn quarters(&self) -> Vec<u32> {
        let mut qs: Vec<u32> = self.events.iter().map(|e| e.quarter).collect();
        qs.dedup();
        qs
    }

    pub fn is_home(&self, team: &str) -> bool {
        team == self.home_team
    }

    pub fn opponent(&self, team: &str) -> &str {
        if team == self.home_team {
            &self.away_team
        } else {
            &self.home_team
        }
    }

    /// The same game seen from the other side: home and away swap, and every
    /// score pair is flipped.
    pub fn swapped(&self) -> GameLog {
        let mut out = self.clone();
        std::mem::swap(&mut out.home_team, &mut out.away_team);
        for e in &mut out.events {
            std::mem::swap(&mut e.score_home, &mut e.score_away);
        }
        out
    }

    /// Score of `team` after event `i`.
    pub fn team_score(&self, i: usize, team: &str) -> u32 {
        let e = &self.events[i];
        if self.is_home(team) {
            e.score_home
        } else {
            e.score_away
        }
    }
}

/// Elapsed seconds from game start.
pub fn to_elapsed(
    quarter: u32,
    clock_remaining: f64,
    quarter_length: f64,
) -> Result<f64, IngestError> {
    if quarter < 1 {
        return Err(IngestError::InvalidQuarter(quarter));
    }
    if !(0.0..=quarter_length).contains(&clock_remaining) {
        return Err(IngestError::ClockOutOfRange {
            clock: clock_remaining,
            quarter_length,
        });
    }
    Ok(elapsed_unchecked(quarter, clock_remaining, quarter_length))
}

fn elapsed_unchecked(quarter: u32, clock_remaining: f64, quarter_length: f64) -> f64 {
    f64::from(quarter - 1) * quarter_length + (quarter_length - clock_remaining)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroadcastFormat {
    Csv,
    JsonLines,
}

impl FromStr for BroadcastFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(BroadcastFormat::Csv),
            "json-lines" | "jsonl" | "jsonlines" => Ok(BroadcastFormat::JsonLines),
            other => Err(format!("unknown broadcast format {other:?}")),
        }
    }
}

impl BroadcastFormat {
    /// Guess from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => BroadcastFormat::JsonLines,
            _ => BroadcastFormat::Csv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BroadcastOptions {
    pub home_team: String,
    pub away_team: Option<String>,
    pub game_id: String,
    pub quarter_length: f64,
}

impl BroadcastOptions {
    pub fn new(home_team: &str) -> Self {
        BroadcastOptions {
            home_team: home_team.to_owned(),
            away_team: None,
            game_id: String::new(),
            quarter_length: DEFAULT_QUARTER_LENGTH,
        }
    }

    pub fn with_game_id(mut self, id: &str) -> Self {
        self.game_id = id.to_owned();
        self
    }
}

/// One raw row before validation.
#[derive(Debug, Clone)]
struct RawRow {
    row: usize,
    quarter: String,
    time: String,
    team: String,
    description: String,
    score: String,
}

pub fn parse_broadcast<R: Read>(
    reader: R,
    format: BroadcastFormat,
    home_team: &str,
) -> Result<GameLog, IngestError> {
    parse_broadcast_with(reader, format, &BroadcastOptions::new(home_team))
}

pub fn parse_broadcast_with<R: Read>(
    reader: R,
    format: BroadcastFormat,
    opts: &BroadcastOptions,
) -> Result<GameLog, IngestError> {
    let rows = match format {
        BroadcastFormat::Csv => read_delimited(reader)?,
        BroadcastFormat::JsonLines => read_json_lines(reader)?,
    };
    build_log(rows, opts)
}

fn read_delimited<R: Read>(mut reader: R) -> Result<Vec<RawRow>, IngestError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| IngestError::Io(e.to_string()))?;
    let delimiter = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| if l.contains('|') { b'|' } else { b',' })
        .unwrap_or(b',');
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::Malformed {
            row: i + 1,
            reason: e.to_string(),
        })?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rows.is_empty()
            && rec
                .get(0)
                .is_some_and(|f| f.eq_ignore_ascii_case("quarter"))
        {
            continue;
        }
        if rec.len() != 5 {
            return Err(IngestError::Malformed {
                row,
                reason: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        rows.push(RawRow {
            row,
            quarter: rec[0].to_owned(),
            time: rec[1].to_owned(),
            team: rec[2].to_owned(),
            description: rec[3].to_owned(),
            score: rec[4].to_owned(),
        });
    }
    Ok(rows)
}

fn read_json_lines<R: Read>(reader: R) -> Result<Vec<RawRow>, IngestError> {
    let mut rows = Vec::new();
    let buf = std::io::BufReader::new(reader);
    for (i, line) in buf.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
                row,
                reason: e.to_string(),
            })?;
        let field = |key: &str| -> Result<String, IngestError> {
            match value.get(key) {
                Some(serde_json::Value::String(s)) => Ok(s.trim().to_owned()),
                Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
                _ => Err(IngestError::Malformed {
                    row,
                    reason: format!("missing field {key:?}"),
                }),
            }
        };
        rows.push(RawRow {
            row,
            quarter: field("quarter")?,
            time: field("time")?,
            team: field("team")?,
            description: field("description")?,
            score: field("score")?,
        });
    }
    Ok(rows)
}

fn parse_quarter(s: &str) -> Option<u32> {
    let t = s.trim().to_ascii_uppercase();
    let (base, digits) = if let Some(rest) = t.strip_prefix("OT") {
        (4, rest)
    } else if let Some(rest) = t.strip_prefix('Q') {
        (0, rest)
    } else {
        (0, t.as_str())
    };
    let n: u32 = if digits.is_empty() && base == 4 {
        1
    } else {
        digits.parse().ok()?
    };
    let q = base + n;
    (q >= 1).then_some(q)
}

/// Parses `MM:SS`, `SS.S"` and bare seconds.
pub fn parse_clock(s: &str) -> Option<f64> {
    let t = s.trim().trim_end_matches('"').trim();
    let secs = if let Some((m, rest)) = t.split_once(':') {
        let m: u32 = m.trim().parse().ok()?;
        let sec: f64 = rest.trim().parse().ok()?;
        if !(0.0..60.0).contains(&sec) {
            return None;
        }
        f64::from(m) * 60.0 + sec
    } else {
        t.parse().ok()?
    };
    (secs.is_finite() && secs >= 0.0).then_some(secs)
}

fn format_clock(secs: f64) -> String {
    if secs.fract() == 0.0 {
        let s = secs as u64;
        format!("{}:{:02}", s / 60, s % 60)
    } else {
        format!("{secs}")
    }
}

fn parse_score(s: &str) -> Option<(u32, u32)> {
    let (h, a) = s.split_once(':')?;
    Some((h.trim().parse().ok()?, a.trim().parse().ok()?))
}

fn build_log(rows: Vec<RawRow>, opts: &BroadcastOptions) -> Result<GameLog, IngestError> {
    let mut log = GameLog::empty(&opts.home_team);
    log.game_id = opts.game_id.clone();
    log.quarter_length = opts.quarter_length;
    if let Some(away) = &opts.away_team {
        log.away_team = away.clone();
    }

    let mut prev: Option<(u32, f64)> = None;
    let (mut prev_home, mut prev_away) = (0u32, 0u32);
    let mut last_shooter: Option<String> = None;

    for raw in rows {
        let row = raw.row;
        let malformed = |reason: String| IngestError::Malformed { row, reason };

        let quarter = parse_quarter(&raw.quarter)
            .ok_or_else(|| malformed(format!("bad quarter {:?}", raw.quarter)))?;
        let clock =
            parse_clock(&raw.time).ok_or_else(|| malformed(format!("bad clock {:?}", raw.time)))?;
        if clock > opts.quarter_length {
            return Err(malformed(format!(
                "clock {clock} exceeds quarter length {}",
                opts.quarter_length
            )));
        }
        let (home, away) = parse_score(&raw.score)
            .ok_or_else(|| malformed(format!("bad score {:?}", raw.score)))?;
        if raw.team.is_empty() {
            return Err(malformed("missing team".into()));
        }
        if raw.description.is_empty() {
            return Err(malformed("missing description".into()));
        }

        let team = raw.team.clone();
        if team != log.home_team {
            if log.away_team.is_empty() {
                log.away_team = team.clone();
            } else if team != log.away_team {
                return Err(IngestError::UnknownTeam { row, team });
            }
        }

        if let Some((pq, pc)) = prev {
            if quarter < pq || (quarter == pq && clock > pc) {
                return Err(IngestError::OutOfOrder {
                    row,
                    reason: format!("Q{quarter} {clock}s follows Q{pq} {pc}s"),
                });
            }
        }
        if home < prev_home || away < prev_away {
            return Err(IngestError::ScoreRegression {
                row,
                prev_home,
                prev_away,
                home,
                away,
            });
        }

        let class =
            classify_raw(&raw.description).map_err(|source| IngestError::Row { row, source })?;
        let code = match class.code {
            RawCode::Known(c) => c,
            RawCode::Rebound => match &last_shooter {
                Some(shooter) if *shooter == team => EventCode::RebOff,
                _ => EventCode::RebDef,
            },
        };
        if code.is_miss() {
            last_shooter = Some(team.clone());
        }

        let is_home = team == log.home_team;
        let (acting_delta, other_delta) = if is_home {
            (home - prev_home, away - prev_away)
        } else {
            (away - prev_away, home - prev_home)
        };
        if other_delta != 0 {
            return Err(IngestError::ScoreMismatch {
                row,
                reason: format!("non-acting team score moved by {other_delta}"),
            });
        }
        if acting_delta != code.points() {
            return Err(IngestError::ScoreMismatch {
                row,
                reason: format!(
                    "{code} credits {} points, score moved by {acting_delta}",
                    code.points()
                ),
            });
        }

        log.events.push(PlayEvent {
            quarter,
            clock_remaining: clock,
            team,
            event_code: code,
            actor: class.actor,
            points: acting_delta,
            score_home: home,
            score_away: away,
            raw_text: raw.description,
        });
        prev = Some((quarter, clock));
        prev_home = home;
        prev_away = away;
    }
    Ok(log)
}

/// Writes a log back out in broadcast form.
pub fn write_broadcast<W: Write>(
    log: &GameLog,
    format: BroadcastFormat,
    writer: W,
) -> Result<(), IngestError> {
    let io = |e: std::io::Error| IngestError::Io(e.to_string());
    match format {
        BroadcastFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(["quarter", "time", "team", "description", "score"])
                .map_err(|e| IngestError::Io(e.to_string()))?;
            for e in &log.events {
                w.write_record([
                    format!("Q{}", e.quarter),
                    format_clock(e.clock_remaining),
                    e.team.clone(),
                    e.raw_text.clone(),
                    format!("{}:{}", e.score_home, e.score_away),
                ])
                .map_err(|e| IngestError::Io(e.to_string()))?;
            }
            w.flush().map_err(io)?;
        }
        BroadcastFormat::JsonLines => {
            let mut w = writer;
            for e in &log.events {
                let obj = serde_json::json!({
                    "quarter": e.quarter,
                    "time": format_clock(e.clock_remaining),
                    "team": e.team,
                    "description": e.raw_text,
                    "score": format!("{}:{}", e.score_home, e.score_away),
                });
                writeln!(w, "{obj}").map_err(io)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub code: EventCode,
    pub actor: Option<String>,
    pub points: u32,
}

#[derive(Debug, Clone, Copy)]
enum RawCode {
    Known(EventCode),
    /// Rebound without an explicit offensive/defensive marker.
    Rebound,
}

struct RawClass {
    code: RawCode,
    actor: Option<String>,
}

// Ordered: first match wins.
static PATTERNS: LazyLock<Vec<(Regex, Option<RawCode>)>> = LazyLock::new(|| {
    use EventCode::*;
    let known = |c| Some(RawCode::Known(c));
    let table: Vec<(&str, Option<RawCode>)> = vec![
        (r"\btime-?out\b|\bpause\b", known(Timeout)),
        (
            r"\bsubstitut|\benters the game\b|\blineup\b|\breplaces\b|\bchecks in\b|\bcomes in for\b",
            known(Lineup),
        ),
        (r"free throw.*\bmiss|\bmiss(es|ed)?\b.*free throw", None),
        (
            r"\b(makes?|made|hits?)\b.*free throw|free throws?,?\s*(hit|made|good)\b",
            known(MadeFt),
        ),
        (
            r"\bmiss(es|ed)?\b.*\b(three|3-pointer|three-pointer|3-point|three-point)\b|\b(three|3) points?,\s*miss",
            known(Miss3pt),
        ),
        (
            r"\b(makes?|made|hits?|drains?|scores?)\b.*\b(three|3-pointer|three-pointer|3-point|three-point)\b|\b(three|3) points?,\s*(hit|made|good)\b",
            known(Made3pt),
        ),
        (
            r"\bmiss(es|ed)?\b|\b(two|2) points?,\s*miss",
            known(Miss2pt),
        ),
        (
            r"\b(makes?|made|hits?|scores?)\b|\b(two|2) points?,\s*(hit|made|good)\b",
            known(Made2pt),
        ),
        (r"\bassist(s|ed)?\b", known(Assist)),
        (r"\boffensive rebound", known(RebOff)),
        (r"\bdefensive rebound", known(RebDef)),
        (r"\brebound", Some(RawCode::Rebound)),
        (r"\bshooting foul\b", known(FoulShooting)),
        (r"\boffensive foul\b|\bcharg(e|ing)\b", known(FoulOffensive)),
        (r"\bflagrant\b|\bmalicious foul\b", known(FoulFlagrant)),
        (r"\btechnical\b", known(FoulTechnical)),
        (r"\bfoul", known(FoulPersonal)),
        (r"\bbad pass\b|\bpass(ing)? error\b", known(ToBadPass)),
        (r"\bout of bounds\b", known(ToOutOfBounds)),
        (
            r"\blost ball\b|\blos(es|ing) the ball\b|\bturnover\b|\btravel(l)?ing\b",
            known(ToLostBall),
        ),
    ];
    table
        .into_iter()
        .map(|(p, c)| (Regex::new(&format!("(?i){p}")).expect("static pattern"), c))
        .collect()
});

fn classify_raw(description: &str) -> Result<RawClass, ClassifyError> {
    let text = description.trim();
    if text.is_empty() {
        return Err(ClassifyError::Unclassified(description.to_owned()));
    }
    let code = PATTERNS
        .iter()
        .find(|(re, _)| re.is_match(text))
        .and_then(|(_, c)| *c)
        .ok_or_else(|| ClassifyError::Unclassified(description.to_owned()))?;
    let actor = match code {
        RawCode::Known(EventCode::Timeout) => None,
        _ => leading_name(text),
    };
    Ok(RawClass { code, actor })
}

/// Classifies a single description without game context. A rebound with no
/// explicit marker is reported as defensive; [`parse_broadcast`] refines it
/// from the last missed shot.
pub fn classify_event(description: &str) -> Result<Classification, ClassifyError> {
    let raw = classify_raw(description)?;
    let code = match raw.code {
        RawCode::Known(c) => c,
        RawCode::Rebound => EventCode::RebDef,
    };
    Ok(Classification {
        code,
        actor: raw.actor,
        points: code.points(),
    })
}

/// Leading run of capitalised tokens, e.g. `"Jimmy Butler, two points"` ->
/// `"Jimmy Butler"`.
fn leading_name(text: &str) -> Option<String> {
    let mut parts = Vec::new();
    for token in text.split_whitespace() {
        let first = token.chars().next()?;
        if !first.is_uppercase() {
            break;
        }
        let ends_clause = token.ends_with([',', ';', ':']);
        let mut word = token.trim_end_matches([',', ';', ':']);
        // keep abbreviations such as "Jr." and "T.J."
        if let Some(stem) = word.strip_suffix('.') {
            if stem.len() > 2 && !stem.contains('.') {
                word = stem;
            }
        }
        if !word.is_empty() {
            parts.push(word);
        }
        if ends_clause {
            break;
        }
    }
    (!parts.is_empty()).then(|| parts.join(" "))
}
