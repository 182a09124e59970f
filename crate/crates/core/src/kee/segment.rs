use serde::{Deserialize, Serialize};

use super::series::ScoreSeries;
use super::KeeConfig;

/// Indices of the extreme spreads of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyTimes {
    /// Sample index of the largest spread.
    pub key_time_1: usize,
    /// Sample index of the smallest spread.
    pub key_time_2: usize,
    pub snapped_1: bool,
    pub snapped_2: bool,
}

/// Argmax and argmin of the spread, ties going to the earliest sample.
///
/// # Panics
/// On an empty series.
pub fn key_times(series: &ScoreSeries) -> KeyTimes {
    assert!(!series.is_empty(), "key_times on empty series");
    let (mut hi, mut lo) = (0, 0);
    for (i, s) in series.samples.iter().enumerate() {
        if s.dif > series.samples[hi].dif {
            hi = i;
        }
        if s.dif < series.samples[lo].dif {
            lo = i;
        }
    }
    KeyTimes {
        key_time_1: hi,
        key_time_2: lo,
        snapped_1: false,
        snapped_2: false,
    }
}

/// Moves a key time that falls in the first sixth of the scope (by elapsed
/// time) to the first sample, and one in the last sixth to the final sample.
/// A key time exactly on a sixth boundary stays put.
pub fn snap_key_times(series: &ScoreSeries, kt: KeyTimes) -> KeyTimes {
    let n = series.len() - 1;
    let t0 = series.t(0);
    let span = series.t(n) - t0;
    let snap = |idx: usize| -> (usize, bool) {
        if span <= 0.0 {
            return (0, true);
        }
        let offset = series.t(idx) - t0;
        if offset * 6.0 < span {
            (0, true)
        } else if (span - offset) * 6.0 < span {
            (n, true)
        } else {
            (idx, false)
        }
    };
    let (k1, s1) = snap(kt.key_time_1);
    let (k2, s2) = snap(kt.key_time_2);
    KeyTimes {
        key_time_1: k1,
        key_time_2: k2,
        snapped_1: s1,
        snapped_2: s2,
    }
}

/// The direction of play within one segment, from the home team's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    SteadyLead,
    SteadyTrail,
    Stalemate,
    ExpandAdvantage,
    NarrowAdvantage,
    ExpandDisadvantage,
    NarrowDisadvantage,
    /// Home team loses its lead.
    Overtaken,
    /// Home team comes from behind to lead.
    Overtake,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::SteadyLead,
        Phase::SteadyTrail,
        Phase::Stalemate,
        Phase::ExpandAdvantage,
        Phase::NarrowAdvantage,
        Phase::ExpandDisadvantage,
        Phase::NarrowDisadvantage,
        Phase::Overtaken,
        Phase::Overtake,
    ];

    pub fn mirrored(self) -> Phase {
        use Phase::*;
        match self {
            SteadyLead => SteadyTrail,
            SteadyTrail => SteadyLead,
            Stalemate => Stalemate,
            ExpandAdvantage => ExpandDisadvantage,
            ExpandDisadvantage => ExpandAdvantage,
            NarrowAdvantage => NarrowDisadvantage,
            NarrowDisadvantage => NarrowAdvantage,
            Overtaken => Overtake,
            Overtake => Overtaken,
        }
    }

    /// Whether the home team's position worsens over the phase.
    pub fn home_disadvantage_grows(self) -> bool {
        matches!(self, Phase::ExpandDisadvantage | Phase::Overtaken)
    }

    /// Whether the away team's position worsens over the phase.
    pub fn away_disadvantage_grows(self) -> bool {
        matches!(self, Phase::ExpandAdvantage | Phase::Overtake)
    }
}

/// Overall trend of a scope, from the home team's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrendLabel {
    SteadyLead,
    SteadyTrail,
    Stalemate,
    /// Spread dips to its minimum, then recovers.
    OvertakenThenReduce,
    /// Spread climbs to its maximum, then fades.
    ReboundThenReduce,
    /// Maximum first, positive maximum, negative minimum.
    ExpandAdvOvertakenNarrowDisadv,
    /// Minimum first, positive maximum, negative minimum.
    ExpandDisadvOvertakeNarrowAdv,
    /// Maximum first, home never ahead.
    NarrowDisadvExpandDisadvNarrowDisadv,
    /// Minimum first, home never ahead.
    ExpandDisadvNarrowDisadvExpandDisadv,
    /// Maximum first, home never behind.
    ExpandAdvNarrowAdvExpandAdv,
    /// Minimum first, home never behind.
    NarrowAdvExpandAdvNarrowAdv,
}

impl TrendLabel {
    pub const ALL: [TrendLabel; 11] = [
        TrendLabel::SteadyLead,
        TrendLabel::SteadyTrail,
        TrendLabel::Stalemate,
        TrendLabel::OvertakenThenReduce,
        TrendLabel::ReboundThenReduce,
        TrendLabel::ExpandAdvOvertakenNarrowDisadv,
        TrendLabel::ExpandDisadvOvertakeNarrowAdv,
        TrendLabel::NarrowDisadvExpandDisadvNarrowDisadv,
        TrendLabel::ExpandDisadvNarrowDisadvExpandDisadv,
        TrendLabel::ExpandAdvNarrowAdvExpandAdv,
        TrendLabel::NarrowAdvExpandAdvNarrowAdv,
    ];

    /// Label of the same scope seen from the away team.
    pub fn mirrored(self) -> TrendLabel {
        use TrendLabel::*;
        match self {
            SteadyLead => SteadyTrail,
            SteadyTrail => SteadyLead,
            Stalemate => Stalemate,
            OvertakenThenReduce => ReboundThenReduce,
            ReboundThenReduce => OvertakenThenReduce,
            ExpandAdvOvertakenNarrowDisadv => ExpandDisadvOvertakeNarrowAdv,
            ExpandDisadvOvertakeNarrowAdv => ExpandAdvOvertakenNarrowDisadv,
            NarrowDisadvExpandDisadvNarrowDisadv => NarrowAdvExpandAdvNarrowAdv,
            NarrowAdvExpandAdvNarrowAdv => NarrowDisadvExpandDisadvNarrowDisadv,
            ExpandDisadvNarrowDisadvExpandDisadv => ExpandAdvNarrowAdvExpandAdv,
            ExpandAdvNarrowAdvExpandAdv => ExpandDisadvNarrowDisadvExpandDisadv,
        }
    }

    pub fn segment_count(self) -> usize {
        use TrendLabel::*;
        match self {
            SteadyLead | SteadyTrail | Stalemate => 1,
            OvertakenThenReduce | ReboundThenReduce => 2,
            _ => 3,
        }
    }

    /// Phases of the three-segment composites, in time order.
    pub fn three_phases(self) -> Option<[Phase; 3]> {
        use Phase::*;
        Some(match self {
            TrendLabel::ExpandAdvOvertakenNarrowDisadv => {
                [ExpandAdvantage, Overtaken, NarrowDisadvantage]
            }
            TrendLabel::ExpandDisadvOvertakeNarrowAdv => {
                [ExpandDisadvantage, Overtake, NarrowAdvantage]
            }
            TrendLabel::NarrowDisadvExpandDisadvNarrowDisadv => {
                [NarrowDisadvantage, ExpandDisadvantage, NarrowDisadvantage]
            }
            TrendLabel::ExpandDisadvNarrowDisadvExpandDisadv => {
                [ExpandDisadvantage, NarrowDisadvantage, ExpandDisadvantage]
            }
            TrendLabel::ExpandAdvNarrowAdvExpandAdv => {
                [ExpandAdvantage, NarrowAdvantage, ExpandAdvantage]
            }
            TrendLabel::NarrowAdvExpandAdvNarrowAdv => {
                [NarrowAdvantage, ExpandAdvantage, NarrowAdvantage]
            }
            _ => return None,
        })
    }

    /// Every phase a scope with this label can contain.
    pub fn possible_phases(self) -> Vec<Phase> {
        use Phase::*;
        match self {
            TrendLabel::SteadyLead => vec![SteadyLead],
            TrendLabel::SteadyTrail => vec![SteadyTrail],
            TrendLabel::Stalemate => vec![Stalemate],
            TrendLabel::OvertakenThenReduce | TrendLabel::ReboundThenReduce => vec![
                Overtaken,
                Overtake,
                ExpandAdvantage,
                NarrowAdvantage,
                ExpandDisadvantage,
                NarrowDisadvantage,
            ],
            other => other.three_phases().map(|p| p.to_vec()).unwrap_or_default(),
        }
    }
}

/// Inclusive span of samples with its trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: TrendLabel,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation {
    pub series: ScoreSeries,
    /// Key times before snapping.
    pub key_times: KeyTimes,
    pub snapped: KeyTimes,
    pub label: TrendLabel,
    pub segments: Vec<Segment>,
}

/// Segments a series with the default thresholds.
pub fn segment(series: &ScoreSeries) -> Vec<Segment> {
    segment_with(series.clone(), &KeeConfig::default()).segments
}

pub fn segment_with(series: ScoreSeries, config: &KeeConfig) -> Segmentation {
    let raw = key_times(&series);
    let snapped = snap_key_times(&series, raw);
    let n = series.len() - 1;
    let difs = series.difs();
    let hi = difs[raw.key_time_1];
    let lo = difs[raw.key_time_2];
    let range = hi - lo;
    let wide = range > config.range_threshold;

    let seg = |start, end, label, phase| Segment {
        start,
        end,
        label,
        phase,
    };

    let (label, segments) = if wide && !snapped.snapped_1 && !snapped.snapped_2 {
        let max_first = raw.key_time_1 < raw.key_time_2;
        let label = match (hi > 0 && lo < 0, hi <= 0, max_first) {
            (true, _, true) => TrendLabel::ExpandAdvOvertakenNarrowDisadv,
            (true, _, false) => TrendLabel::ExpandDisadvOvertakeNarrowAdv,
            (false, true, true) => TrendLabel::NarrowDisadvExpandDisadvNarrowDisadv,
            (false, true, false) => TrendLabel::ExpandDisadvNarrowDisadvExpandDisadv,
            (false, false, true) => TrendLabel::ExpandAdvNarrowAdvExpandAdv,
            (false, false, false) => TrendLabel::NarrowAdvExpandAdvNarrowAdv,
        };
        let phases = label.three_phases().expect("three-segment label");
        let a = raw.key_time_1.min(raw.key_time_2);
        let b = raw.key_time_1.max(raw.key_time_2);
        (
            label,
            vec![
                seg(0, a, label, phases[0]),
                seg(a + 1, b, label, phases[1]),
                seg(b + 1, n, label, phases[2]),
            ],
        )
    } else if wide && snapped.snapped_1 != snapped.snapped_2 {
        if snapped.snapped_1 {
            // minimum is interior: fall, then recover
            let k = raw.key_time_2;
            let before_peak = difs[..=k].iter().copied().max().unwrap_or(lo);
            let after_peak = difs[k + 1..].iter().copied().max().unwrap_or(lo);
            let first = if before_peak > 0 && lo < 0 {
                Phase::Overtaken
            } else if lo < 0 {
                Phase::ExpandDisadvantage
            } else {
                Phase::NarrowAdvantage
            };
            let second = if lo < 0 && after_peak > 0 {
                Phase::Overtake
            } else if lo < 0 {
                Phase::NarrowDisadvantage
            } else {
                Phase::ExpandAdvantage
            };
            let label = TrendLabel::OvertakenThenReduce;
            (
                label,
                vec![seg(0, k, label, first), seg(k + 1, n, label, second)],
            )
        } else {
            // maximum is interior: climb, then fade
            let k = raw.key_time_1;
            let before_low = difs[..=k].iter().copied().min().unwrap_or(hi);
            let after_low = difs[k + 1..].iter().copied().min().unwrap_or(hi);
            let first = if before_low < 0 && hi > 0 {
                Phase::Overtake
            } else if hi > 0 {
                Phase::ExpandAdvantage
            } else {
                Phase::NarrowDisadvantage
            };
            let second = if hi > 0 && after_low < 0 {
                Phase::Overtaken
            } else if hi > 0 {
                Phase::NarrowAdvantage
            } else {
                Phase::ExpandDisadvantage
            };
            let label = TrendLabel::ReboundThenReduce;
            (
                label,
                vec![seg(0, k, label, first), seg(k + 1, n, label, second)],
            )
        }
    } else {
        let label = if lo > config.steady_threshold {
            TrendLabel::SteadyLead
        } else if hi < -config.steady_threshold {
            TrendLabel::SteadyTrail
        } else if hi > 0 && lo < 0 {
            TrendLabel::Stalemate
        } else {
            match difs.iter().sum::<i64>().signum() {
                1 => TrendLabel::SteadyLead,
                -1 => TrendLabel::SteadyTrail,
                _ => TrendLabel::Stalemate,
            }
        };
        let phase = match label {
            TrendLabel::SteadyLead => Phase::SteadyLead,
            TrendLabel::SteadyTrail => Phase::SteadyTrail,
            _ => Phase::Stalemate,
        };
        (label, vec![seg(0, n, label, phase)])
    };

    Segmentation {
        series,
        key_times: raw,
        snapped,
        label,
        segments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(difs: &[i64]) -> ScoreSeries {
        let pts: Vec<(f64, i64)> = difs
            .iter()
            .enumerate()
            .map(|(i, &d)| (i as f64 * 10.0, d))
            .collect();
        ScoreSeries::from_points(&pts)
    }

    #[test]
    fn key_time_examples() {
        let kt = key_times(&series(&[0, 5, -3]));
        assert_eq!((kt.key_time_1, kt.key_time_2), (1, 2));
        let kt = key_times(&series(&[4, 4, 4]));
        assert_eq!((kt.key_time_1, kt.key_time_2), (0, 0));
        let kt = key_times(&series(&[7]));
        assert_eq!((kt.key_time_1, kt.key_time_2), (0, 0));
    }

    fn snap_at(t: f64) -> KeyTimes {
        // series over [0, 600]; key time at `t`
        let s = ScoreSeries::from_points(&[(0.0, 0), (t, 1), (600.0, 0)]);
        snap_key_times(
            &s,
            KeyTimes {
                key_time_1: 1,
                key_time_2: 1,
                snapped_1: false,
                snapped_2: false,
            },
        )
    }

    #[test]
    fn snapping_rules() {
        let k = snap_at(30.0); // 5%
        assert_eq!((k.key_time_1, k.snapped_1), (0, true));
        let k = snap_at(300.0);
        assert_eq!((k.key_time_1, k.snapped_1), (1, false));
        let k = snap_at(100.0); // exactly 1/6
        assert_eq!((k.key_time_1, k.snapped_1), (1, false));
        let k = snap_at(500.0); // exactly 5/6
        assert_eq!((k.key_time_1, k.snapped_1), (1, false));
        let k = snap_at(590.0);
        assert_eq!((k.key_time_1, k.snapped_1), (2, true));
    }

    #[test]
    fn three_segment_case_one() {
        // rises to +12 mid-scope, falls to -4 before the last sixth
        let difs = [0, 3, 6, 9, 12, 8, 4, 0, -4, -2, -1, -1, -1];
        let s = segment_with(series(&difs), &KeeConfig::default());
        assert_eq!(s.label, TrendLabel::ExpandAdvOvertakenNarrowDisadv);
        let spans: Vec<_> = s
            .segments
            .iter()
            .map(|g| (g.start, g.end, g.phase))
            .collect();
        assert_eq!(
            spans,
            vec![
                (0, 4, Phase::ExpandAdvantage),
                (5, 8, Phase::Overtaken),
                (9, 12, Phase::NarrowDisadvantage)
            ]
        );
    }

    #[test]
    fn one_segment_labels() {
        let s = segment(&series(&[11, 12, 14, 13, 11, 12]));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label, TrendLabel::SteadyLead);
        let s = segment(&series(&[-11, -12, -14, -13]));
        assert_eq!(s[0].label, TrendLabel::SteadyTrail);
        let s = segment(&series(&[0, 2, -3, 3, -1, 1, 0]));
        assert_eq!(s[0].label, TrendLabel::Stalemate);
        // no printed condition holds: fall back to the sign of the mean
        let s = segment(&series(&[2, 5, 8, 4, 3]));
        assert_eq!(s[0].label, TrendLabel::SteadyLead);
        let s = segment(&series(&[0, 0, 0]));
        assert_eq!(s[0].label, TrendLabel::Stalemate);
    }

    #[test]
    fn monotone_series_is_one_segment() {
        let difs: Vec<i64> = (0..20).map(|i| i * 2 - 10).collect();
        let s = segment_with(series(&difs), &KeeConfig::default());
        assert_eq!(s.key_times.key_time_1, 19);
        assert_eq!(s.key_times.key_time_2, 0);
        assert!(s.snapped.snapped_1 && s.snapped.snapped_2);
        assert_eq!(s.segments.len(), 1);
    }

    #[test]
    fn two_segments_when_one_key_snaps() {
        // early small lead, deep interior trough, partial recovery
        let difs = [0, 2, 0, -3, -6, -9, -12, -16, -13, -15, -13, -15];
        let s = segment_with(series(&difs), &KeeConfig::default());
        assert_eq!(s.label, TrendLabel::OvertakenThenReduce);
        let spans: Vec<_> = s
            .segments
            .iter()
            .map(|g| (g.start, g.end, g.phase))
            .collect();
        assert_eq!(
            spans,
            vec![(0, 7, Phase::Overtaken), (8, 11, Phase::NarrowDisadvantage)]
        );
        let m = segment_with(series(&difs).negated(), &KeeConfig::default());
        assert_eq!(m.label, TrendLabel::ReboundThenReduce);
        let phases: Vec<_> = m.segments.iter().map(|g| g.phase).collect();
        assert_eq!(phases, vec![Phase::Overtake, Phase::NarrowAdvantage]);
    }

    #[test]
    fn label_and_phase_mirrors_are_involutions() {
        for l in TrendLabel::ALL {
            assert_eq!(l.mirrored().mirrored(), l);
            assert_eq!(l.mirrored().segment_count(), l.segment_count());
        }
        for p in Phase::ALL {
            assert_eq!(p.mirrored().mirrored(), p);
        }
    }
}
