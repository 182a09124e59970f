use std::fmt;

use serde::{Deserialize, Serialize};

use super::KeeError;
use crate::ingest::GameLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Quarter(u32),
    Game,
}

impl Scope {
    pub fn contains(self, quarter: u32) -> bool {
        match self {
            Scope::Quarter(q) => q == quarter,
            Scope::Game => true,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Quarter(q) => write!(f, "Q{q}"),
            Scope::Game => f.write_str("game"),
        }
    }
}

/// One point of the spread series. Events sharing a timestamp collapse into a
/// single sample carrying the score after the last of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Elapsed seconds from game start.
    pub t: f64,
    pub dif: i64,
    pub first_event: usize,
    pub last_event: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub scope: Scope,
    pub home_team: String,
    pub away_team: String,
    pub samples: Vec<Sample>,
}

impl ScoreSeries {
    /// Builds a series from raw `(t, dif)` points; event indices are the
    /// sample positions. Times must be strictly increasing.
    pub fn from_points(points: &[(f64, i64)]) -> ScoreSeries {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        ScoreSeries {
            scope: Scope::Game,
            home_team: "home".into(),
            away_team: "away".into(),
            samples: points
                .iter()
                .enumerate()
                .map(|(i, &(t, dif))| Sample {
                    t,
                    dif,
                    first_event: i,
                    last_event: i,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn difs(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.dif).collect()
    }

    pub fn dif(&self, i: usize) -> i64 {
        self.samples[i].dif
    }

    pub fn t(&self, i: usize) -> f64 {
        self.samples[i].t
    }

    /// The same series from the away team's side.
    pub fn negated(&self) -> ScoreSeries {
        ScoreSeries {
            scope: self.scope,
            home_team: self.away_team.clone(),
            away_team: self.home_team.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    dif: -s.dif,
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Home-minus-away spread after every event in `scope`.
pub fn score_diff_series(log: &GameLog, scope: Scope) -> Result<ScoreSeries, KeeError> {
    let mut samples: Vec<Sample> = Vec::new();
    for (i, e) in log.events.iter().enumerate() {
        if !scope.contains(e.quarter) {
            continue;
        }
        let t = log.elapsed(i);
        let dif = i64::from(e.score_home) - i64::from(e.score_away);
        match samples.last_mut() {
            Some(last) if last.t == t && last.last_event + 1 == i => {
                last.dif = dif;
                last.last_event = i;
            }
            _ => samples.push(Sample {
                t,
                dif,
                first_event: i,
                last_event: i,
            }),
        }
    }
    if samples.is_empty() {
        return Err(KeeError::EmptyScope(scope));
    }
    Ok(ScoreSeries {
        scope,
        home_team: log.home_team.clone(),
        away_team: log.away_team.clone(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_broadcast, BroadcastFormat};

    const ROWS: &str = "Q1,11:44,76ers,\"Jimmy Butler, two points, miss.\",0:0\n\
        Q1,11:20,Pelicans,Jrue Holiday makes a layup,2:0\n\
        Q1,11:00,76ers,Joel Embiid makes a three-pointer,2:3\n\
        Q1,11:00,76ers,Joel Embiid makes free throw,2:4\n\
        Q2,11:00,Pelicans,Jrue Holiday misses a three.,2:4\n";

    fn log() -> GameLog {
        parse_broadcast(ROWS.as_bytes(), BroadcastFormat::Csv, "Pelicans").unwrap()
    }

    #[test]
    fn per_quarter_series_collapses_shared_timestamps() {
        let s = score_diff_series(&log(), Scope::Quarter(1)).unwrap();
        assert_eq!(s.difs(), vec![0, 2, -2]);
        assert_eq!(s.samples[2].first_event, 2);
        assert_eq!(s.samples[2].last_event, 3);
        assert!(s.samples.windows(2).all(|w| w[0].t < w[1].t));
        let g = score_diff_series(&log(), Scope::Game).unwrap();
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn empty_scope_errors() {
        assert_eq!(
            score_diff_series(&log(), Scope::Quarter(3)),
            Err(KeeError::EmptyScope(Scope::Quarter(3)))
        );
    }

    #[test]
    fn swapping_sides_negates() {
        let l = log();
        let a = score_diff_series(&l, Scope::Game).unwrap();
        let b = score_diff_series(&l.swapped(), Scope::Game).unwrap();
        assert_eq!(b, a.negated());
    }

    #[test]
    fn scoreless_quarter_is_flat() {
        let s = score_diff_series(&log(), Scope::Quarter(2)).unwrap();
        assert_eq!(s.difs(), vec![-2]);
        let rows = "Q1,11:44,A,X misses a three.,0:0\nQ1,10:00,B,Y misses a three.,0:0\n";
        let l = parse_broadcast(rows.as_bytes(), BroadcastFormat::Csv, "A").unwrap();
        let s = score_diff_series(&l, Scope::Quarter(1)).unwrap();
        assert!(s.difs().iter().all(|&d| d == 0));
    }
}
