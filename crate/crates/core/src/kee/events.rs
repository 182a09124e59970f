use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::segment::{Segment, Segmentation};
use super::series::Scope;
use super::KeeConfig;
use crate::ingest::{EventCode, GameLog};
use crate::kg::{EntityClass, KnowledgeGraph, RelationType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KeyEventKind {
    HighestScore,
    ConsecutivePoints,
    /// A basket that pulls a team back within reach or puts it ahead.
    #[serde(rename = "SIGNIFICANT_SCORE_1")]
    SignificantScore1,
    /// Reserved; never emitted.
    #[serde(rename = "SIGNIFICANT_SCORE_2")]
    SignificantScore2,
    /// Reserved; never emitted.
    #[serde(rename = "SIGNIFICANT_SCORE_3")]
    SignificantScore3,
    /// A basket ending a long team drought.
    #[serde(rename = "SIGNIFICANT_SCORE_4")]
    SignificantScore4,
    KeyRebound,
    MostTurnovers,
    MostIronShots,
    OffensiveHighlight,
    KeyTimeout,
}

impl KeyEventKind {
    pub const ALL: [KeyEventKind; 11] = [
        KeyEventKind::HighestScore,
        KeyEventKind::ConsecutivePoints,
        KeyEventKind::SignificantScore1,
        KeyEventKind::SignificantScore2,
        KeyEventKind::SignificantScore3,
        KeyEventKind::SignificantScore4,
        KeyEventKind::KeyRebound,
        KeyEventKind::MostTurnovers,
        KeyEventKind::MostIronShots,
        KeyEventKind::OffensiveHighlight,
        KeyEventKind::KeyTimeout,
    ];

    pub fn as_str(self) -> &'static str {
        use KeyEventKind::*;
        match self {
            HighestScore => "HIGHEST_SCORE",
            ConsecutivePoints => "CONSECUTIVE_POINTS",
            SignificantScore1 => "SIGNIFICANT_SCORE_1",
            SignificantScore2 => "SIGNIFICANT_SCORE_2",
            SignificantScore3 => "SIGNIFICANT_SCORE_3",
            SignificantScore4 => "SIGNIFICANT_SCORE_4",
            KeyRebound => "KEY_REBOUND",
            MostTurnovers => "MOST_TURNOVERS",
            MostIronShots => "MOST_IRON_SHOTS",
            OffensiveHighlight => "OFFENSIVE_HIGHLIGHT",
            KeyTimeout => "KEY_TIMEOUT",
        }
    }

    pub fn is_significant_score(self) -> bool {
        matches!(
            self,
            KeyEventKind::SignificantScore1 | KeyEventKind::SignificantScore4
        )
    }
}

impl std::fmt::Display for KeyEventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A notable play: who, for which team, what, with what result, and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyEvent {
    /// `None` for team-level events.
    pub player: Option<String>,
    pub team: String,
    pub action: KeyEventKind,
    /// Points, counts or margins depending on `action`.
    pub result: i64,
    /// Elapsed seconds from game start.
    pub time: f64,
    pub scope: Scope,
    pub segment: usize,
    /// Index of the anchoring play in the game log.
    pub event_index: usize,
}

/// Event index range `[lo, hi]` covered by a segment.
fn event_span(seg: &Segmentation, s: &Segment) -> (usize, usize) {
    (
        seg.series.samples[s.start].first_event,
        seg.series.samples[s.end].last_event,
    )
}

fn margin_before(log: &GameLog, i: usize, team: &str) -> i64 {
    if i == 0 {
        return 0;
    }
    let own = i64::from(log.team_score(i - 1, team));
    let opp = i64::from(log.team_score(i - 1, log.opponent(team)));
    own - opp
}

fn margin_after(log: &GameLog, i: usize, team: &str) -> i64 {
    let own = i64::from(log.team_score(i, team));
    let opp = i64::from(log.team_score(i, log.opponent(team)));
    own - opp
}

/// Key events of every segment of one scope, ordered by segment, time, kind
/// and player.
pub fn extract_key_events(
    log: &GameLog,
    seg: &Segmentation,
    config: &KeeConfig,
    kg: Option<&KnowledgeGraph>,
) -> Vec<KeyEvent> {
    let scope = seg.series.scope;
    let mut out: Vec<KeyEvent> = Vec::new();
    let spans: Vec<(usize, usize)> = seg.segments.iter().map(|s| event_span(seg, s)).collect();
    let segment_of = |i: usize| spans.iter().position(|&(lo, hi)| lo <= i && i <= hi);

    let push = |out: &mut Vec<KeyEvent>,
                segment: usize,
                action: KeyEventKind,
                team: &str,
                player: Option<&str>,
                result: i64,
                i: usize| {
        out.push(KeyEvent {
            player: player.map(str::to_owned),
            team: team.to_owned(),
            action,
            result,
            time: log.elapsed(i),
            scope,
            segment,
            event_index: i,
        });
    };

    for (si, (s, &(lo, hi))) in seg.segments.iter().zip(&spans).enumerate() {
        let idx = lo..=hi;

        // Highest scorer.
        let mut scorers: BTreeMap<(&str, &str), (u32, usize, usize)> = BTreeMap::new();
        for i in idx.clone() {
            let e = &log.events[i];
            if let (true, Some(a)) = (e.event_code.is_scoring(), e.actor.as_deref()) {
                let entry = scorers.entry((a, e.team.as_str())).or_insert((0, i, i));
                entry.0 += e.points;
                entry.2 = i;
            }
        }
        let best = scorers.iter().max_by(|a, b| {
            let (pa, fa, _) = a.1;
            let (pb, fb, _) = b.1;
            pa.cmp(pb)
                .then_with(|| fb.cmp(fa))
                .then_with(|| b.0 .0.cmp(a.0 .0))
        });
        if let Some((&(player, team), &(pts, _, last))) = best {
            push(
                &mut out,
                si,
                KeyEventKind::HighestScore,
                team,
                Some(player),
                i64::from(pts),
                last,
            );
        }

        // Significant scores, and the rebounds that set them up.
        for i in idx.clone() {
            let e = &log.events[i];
            if !e.event_code.is_scoring() {
                continue;
            }
            let before = margin_before(log, i, &e.team);
            let after = margin_after(log, i, &e.team);
            let mut significant = false;
            if (before < -config.comeback_deficit && after >= -config.comeback_deficit)
                || (before < 0 && after > 0)
            {
                push(
                    &mut out,
                    si,
                    KeyEventKind::SignificantScore1,
                    &e.team,
                    e.actor.as_deref(),
                    after,
                    i,
                );
                significant = true;
            }
            let t = log.elapsed(i);
            let prev_score = (0..i)
                .rev()
                .find(|&j| log.events[j].team == e.team && log.events[j].event_code.is_scoring())
                .map(|j| log.elapsed(j))
                .unwrap_or(0.0);
            if t - prev_score >= config.drought_seconds {
                let gap = (t - prev_score).round() as i64;
                push(
                    &mut out,
                    si,
                    KeyEventKind::SignificantScore4,
                    &e.team,
                    e.actor.as_deref(),
                    gap,
                    i,
                );
                significant = true;
            }
            if significant {
                let from = i.saturating_sub(config.rebound_window).max(lo);
                for j in from..i {
                    let r = &log.events[j];
                    if r.event_code.is_rebound() && r.team == e.team {
                        let dup = out
                            .iter()
                            .any(|k| k.action == KeyEventKind::KeyRebound && k.event_index == j);
                        if !dup {
                            push(
                                &mut out,
                                si,
                                KeyEventKind::KeyRebound,
                                &r.team,
                                r.actor.as_deref(),
                                1,
                                j,
                            );
                        }
                    }
                }
            }
        }

        // Slumps and giveaways of the side losing ground.
        let losing = if s.phase.home_disadvantage_grows() {
            Some(log.home_team.as_str())
        } else if s.phase.away_disadvantage_grows() {
            Some(log.away_team.as_str())
        } else {
            None
        };
        if let Some(team) = losing {
            let tally = |pred: fn(EventCode) -> bool| {
                let mut m: BTreeMap<&str, (u32, usize, usize)> = BTreeMap::new();
                for i in idx.clone() {
                    let e = &log.events[i];
                    if e.team == team && pred(e.event_code) {
                        if let Some(a) = e.actor.as_deref() {
                            let entry = m.entry(a).or_insert((0, i, i));
                            entry.0 += 1;
                            entry.2 = i;
                        }
                    }
                }
                m.into_iter().max_by(|a, b| {
                    a.1 .0
                        .cmp(&b.1 .0)
                        .then_with(|| b.1 .1.cmp(&a.1 .1))
                        .then_with(|| b.0.cmp(a.0))
                })
            };
            if let Some((p, (n, _, last))) = tally(EventCode::is_turnover) {
                push(
                    &mut out,
                    si,
                    KeyEventKind::MostTurnovers,
                    team,
                    Some(p),
                    i64::from(n),
                    last,
                );
            }
            if let Some((p, (n, _, last))) = tally(EventCode::is_miss) {
                if n >= config.slump_min_misses {
                    push(
                        &mut out,
                        si,
                        KeyEventKind::MostIronShots,
                        team,
                        Some(p),
                        i64::from(n),
                        last,
                    );
                }
            }
        }

        // Points of the side that carried the spread to its extreme.
        let hi_dif = seg.series.dif(seg.key_times.key_time_1);
        let lo_dif = seg.series.dif(seg.key_times.key_time_2);
        let team = if s.end == seg.key_times.key_time_1 && hi_dif > 0 {
            Some(log.home_team.as_str())
        } else if s.end == seg.key_times.key_time_2 && lo_dif < 0 {
            Some(log.away_team.as_str())
        } else {
            None
        };
        if let Some(team) = team {
            let pts: u32 = idx
                .clone()
                .filter(|&i| log.events[i].team == team && log.events[i].event_code.is_scoring())
                .map(|i| log.events[i].points)
                .sum();
            if pts > 0 {
                push(
                    &mut out,
                    si,
                    KeyEventKind::OffensiveHighlight,
                    team,
                    None,
                    i64::from(pts),
                    hi,
                );
            }
        }
    }

    // Runs and timeouts look across segment borders and land in the segment
    // holding their anchoring play.
    let in_scope: Vec<usize> = (0..log.events.len())
        .filter(|&i| scope.contains(log.events[i].quarter))
        .collect();

    for team in [log.home_team.as_str(), log.away_team.as_str()] {
        let scores: Vec<usize> = in_scope
            .iter()
            .copied()
            .filter(|&i| log.events[i].team == team && log.events[i].event_code.is_scoring())
            .collect();
        let mut k = 0;
        while k < scores.len() {
            let actor = log.events[scores[k]].actor.as_deref();
            let mut end = k;
            let mut total = log.events[scores[k]].points;
            while end + 1 < scores.len() && log.events[scores[end + 1]].actor.as_deref() == actor {
                end += 1;
                total += log.events[scores[end]].points;
            }
            if let (Some(a), true) = (actor, total >= config.consecutive_run_points) {
                let last = scores[end];
                if let Some(si) = segment_of(last) {
                    push(
                        &mut out,
                        si,
                        KeyEventKind::ConsecutivePoints,
                        team,
                        Some(a),
                        i64::from(total),
                        last,
                    );
                }
            }
            k = end + 1;
        }
    }

    let signed: Vec<(usize, i64)> = in_scope
        .iter()
        .filter(|&&i| log.events[i].event_code.is_scoring())
        .map(|&i| {
            let e = &log.events[i];
            let p = i64::from(e.points);
            (i, if log.is_home(&e.team) { p } else { -p })
        })
        .collect();
    for &i in &in_scope {
        let e = &log.events[i];
        if e.event_code != EventCode::Timeout {
            continue;
        }
        let split = signed.partition_point(|&(j, _)| j < i);
        let before: i64 = signed[split.saturating_sub(config.timeout_window)..split]
            .iter()
            .map(|x| x.1)
            .sum();
        let after_end = (split + config.timeout_window).min(signed.len());
        let after: i64 = signed[split..after_end].iter().map(|x| x.1).sum();
        if before.signum() * after.signum() == -1 {
            if let Some(si) = segment_of(i) {
                let for_team = if log.is_home(&e.team) { after } else { -after };
                push(
                    &mut out,
                    si,
                    KeyEventKind::KeyTimeout,
                    &e.team,
                    e.actor.as_deref(),
                    for_team,
                    i,
                );
            }
        }
    }

    if let Some(kg) = kg {
        out.retain(|k| roster_consistent(kg, k));
    }
    out.sort_by(|a, b| {
        a.segment
            .cmp(&b.segment)
            .then_with(|| a.time.total_cmp(&b.time))
            .then_with(|| a.action.cmp(&b.action))
            .then_with(|| a.player.cmp(&b.player))
    });
    out
}

/// False when the KG knows the player and places them on other teams only.
fn roster_consistent(kg: &KnowledgeGraph, k: &KeyEvent) -> bool {
    let Some(player) = k.player.as_deref() else {
        return true;
    };
    let Some(p) = kg.resolve(EntityClass::Player, player) else {
        return true;
    };
    let team_id = kg
        .resolve(EntityClass::Team, &k.team)
        .map(|t| t.id.as_str())
        .unwrap_or(k.team.as_str());
    let mut teams = kg
        .triples()
        .filter(|t| t.relation == RelationType::PlaysFor && t.head == p.id)
        .peekable();
    teams.peek().is_none() || teams.any(|t| t.tail == team_id)
}
