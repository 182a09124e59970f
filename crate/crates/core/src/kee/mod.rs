//! Key event extraction.
//!
//! A game is reduced to its score-difference series (home minus away), the
//! series is split at its extreme points into labelled trend segments, and
//! notable plays inside each segment are pulled out as [`KeyEvent`]s.

mod events;
mod segment;
mod series;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use events::{extract_key_events, KeyEvent, KeyEventKind};
pub use segment::{
    key_times, segment, segment_with, snap_key_times, KeyTimes, Phase, Segment, Segmentation,
    TrendLabel,
};
pub use series::{score_diff_series, Sample, Scope, ScoreSeries};

use crate::ingest::GameLog;
use crate::kg::KnowledgeGraph;

#[derive(Debug, Error, PartialEq)]
pub enum KeeError {
    #[error("no events in scope {0}")]
    EmptyScope(Scope),
}

/// Thresholds used by segmentation and key-event extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeeConfig {
    /// Spread range above which a scope is split at its key times.
    pub range_threshold: i64,
    /// Minimum (or maximum, negated) spread for a steady lead (trail).
    pub steady_threshold: i64,
    /// Points a single player must score in one team run.
    pub consecutive_run_points: u32,
    /// Deficit a comeback basket must cut through.
    pub comeback_deficit: i64,
    /// Team scoring drought, in seconds.
    pub drought_seconds: f64,
    /// Events before a significant basket searched for a rebound.
    pub rebound_window: usize,
    /// Scoring events on each side of a timeout compared for a swing.
    pub timeout_window: usize,
    pub slump_min_misses: u32,
    /// Segment the whole game at once instead of quarter by quarter.
    pub whole_game: bool,
}

impl Default for KeeConfig {
    fn default() -> Self {
        KeeConfig {
            range_threshold: 8,
            steady_threshold: 10,
            consecutive_run_points: 6,
            comeback_deficit: 8,
            drought_seconds: 180.0,
            rebound_window: 2,
            timeout_window: 5,
            slump_min_misses: 2,
            whole_game: false,
        }
    }
}

impl KeeConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("range_threshold", self.range_threshold > 0),
            ("steady_threshold", self.steady_threshold > 0),
            ("consecutive_run_points", self.consecutive_run_points > 0),
            ("comeback_deficit", self.comeback_deficit > 0),
            ("drought_seconds", self.drought_seconds > 0.0),
            ("rebound_window", self.rebound_window > 0),
            ("timeout_window", self.timeout_window > 0),
            ("slump_min_misses", self.slump_min_misses > 0),
        ];
        match positive.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(format!("kee.{name} must be positive")),
            None => Ok(()),
        }
    }

    pub fn scopes(&self, log: &GameLog) -> Vec<Scope> {
        if self.whole_game {
            vec![Scope::Game]
        } else {
            log.quarters().into_iter().map(Scope::Quarter).collect()
        }
    }
}

/// Segmentation plus key events for every scope of a game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameAnalysis {
    pub scopes: Vec<Segmentation>,
    pub key_events: Vec<KeyEvent>,
}

pub fn analyze(
    log: &GameLog,
    config: &KeeConfig,
    kg: Option<&KnowledgeGraph>,
) -> Result<GameAnalysis, KeeError> {
    let mut scopes = Vec::new();
    let mut key_events = Vec::new();
    for scope in config.scopes(log) {
        let series = score_diff_series(log, scope)?;
        let seg = segment_with(series, config);
        key_events.extend(extract_key_events(log, &seg, config, kg));
        scopes.push(seg);
    }
    Ok(GameAnalysis { scopes, key_events })
}
