mod common;

use common::{oracle_segment, random_walk, read_fixture, to_series, wire_name};
use courtside::ingest::{parse_broadcast, BroadcastFormat, GameLog};
use courtside::kee::{
    analyze, extract_key_events, key_times, score_diff_series, segment, segment_with,
    snap_key_times, KeeConfig, KeyEventKind, KeyTimes, Phase, Scope, ScoreSeries, TrendLabel,
};
use proptest::prelude::*;

fn csv_log(text: &str, home: &str) -> GameLog {
    parse_broadcast(text.as_bytes(), BroadcastFormat::Csv, home).unwrap()
}

fn q1_fixture() -> GameLog {
    csv_log(&read_fixture("q1_76ers_at_pelicans.csv"), "Pelicans")
}

fn series(difs: &[i64]) -> ScoreSeries {
    let pts: Vec<(i64, i64)> = difs
        .iter()
        .enumerate()
        .map(|(i, &d)| (i as i64 * 10, d))
        .collect();
    to_series(&pts)
}

#[test]
fn fixture_quarter_series() {
    let log = q1_fixture();
    let s = score_diff_series(&log, Scope::Quarter(1)).unwrap();
    assert_eq!(*s.difs().last().unwrap(), -15);
    let swapped = score_diff_series(&log.swapped(), Scope::Quarter(1)).unwrap();
    assert_eq!(
        swapped.difs(),
        s.difs().iter().map(|d| -d).collect::<Vec<_>>()
    );
    assert!(score_diff_series(&log, Scope::Quarter(2)).is_err());
}

#[test]
fn scoreless_quarter_is_all_zero() {
    let log = csv_log(
        "quarter,time,team,description,score\n\
         Q1,11:00,A,Al Horford misses a jump shot,0:0\n\
         Q1,10:00,B,Bo Smith misses a jump shot,0:0\n",
        "A",
    );
    let s = score_diff_series(&log, Scope::Quarter(1)).unwrap();
    assert!(s.difs().iter().all(|&d| d == 0));
    let analysis = analyze(&log, &KeeConfig::default(), None).unwrap();
    assert!(analysis
        .key_events
        .iter()
        .all(|e| e.action != KeyEventKind::HighestScore));
}

#[test]
fn fixture_segments_and_highest_scorer() {
    let log = q1_fixture();
    let analysis = analyze(&log, &KeeConfig::default(), None).unwrap();
    let seg = &analysis.scopes[0];
    assert_eq!(seg.label, TrendLabel::OvertakenThenReduce);
    let spans: Vec<_> = seg
        .segments
        .iter()
        .map(|s| (s.start, s.end, s.phase))
        .collect();
    assert_eq!(
        spans,
        [
            (0, 31, Phase::Overtaken),
            (32, 37, Phase::NarrowDisadvantage)
        ]
    );
    let top = analysis
        .key_events
        .iter()
        .find(|e| e.action == KeyEventKind::HighestScore && e.segment == 0)
        .unwrap();
    assert_eq!(top.player.as_deref(), Some("Joel Embiid"));
    assert_eq!(top.team, "76ers");
    assert_eq!(top.result, 13);
}

#[test]
fn key_time_examples() {
    let kt = key_times(&series(&[0, 5, -3]));
    assert_eq!((kt.key_time_1, kt.key_time_2), (1, 2));
    let kt = key_times(&series(&[3, 3, 3, 3]));
    assert_eq!((kt.key_time_1, kt.key_time_2), (0, 0));
}

#[test]
fn rule_examples() {
    // up to +12 mid-scope, down to -4 before the final sixth
    let s = series(&[0, 4, 8, 12, 9, 5, 1, -2, -4, -3, -2, -1, -2]);
    let segs = segment(&s);
    assert_eq!(segs.len(), 3);
    assert_eq!(segs[0].label, TrendLabel::ExpandAdvOvertakenNarrowDisadv);
    assert_eq!(
        segs.iter().map(|g| g.phase).collect::<Vec<_>>(),
        [
            Phase::ExpandAdvantage,
            Phase::Overtaken,
            Phase::NarrowDisadvantage
        ]
    );

    let segs = segment(&series(&[11, 12, 14, 13, 11, 12]));
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].label, TrendLabel::SteadyLead);

    let segs = segment(&series(&[0, 3, -3, 2, -1, 1, -2, 0]));
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].label, TrendLabel::Stalemate);

    // [+2, +8] matches none of the printed one-segment conditions
    let segs = segment(&series(&[2, 5, 8, 6, 3]));
    assert_eq!(segs[0].label, TrendLabel::SteadyLead);
}

#[test]
fn monotone_series_is_one_segment() {
    let s = series(&(0..20).map(|i| i * 2).collect::<Vec<_>>());
    let kt = key_times(&s);
    assert_eq!((kt.key_time_1, kt.key_time_2), (19, 0));
    let snapped = snap_key_times(&s, kt);
    assert!(snapped.snapped_1 && snapped.snapped_2);
    assert_eq!(segment(&s).len(), 1);
}

#[test]
fn oracle_agrees_on_seeded_walks() {
    let mut labels = std::collections::BTreeSet::new();
    for seed in 0..1_000u64 {
        let pts = random_walk(seed);
        let expected = oracle_segment(&pts);
        labels.insert(expected.label);
        let got = segment(&to_series(&pts));
        let spans: Vec<_> = got.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, expected.spans, "seed {seed}: {pts:?}");
        for s in &got {
            assert_eq!(wire_name(&s.label), expected.label, "seed {seed}: {pts:?}");
        }
    }
    // the walks reach every branch of the rules
    assert!(labels.len() >= 9, "{labels:?}");
}

#[test]
fn consecutive_run_by_one_player() {
    let log = csv_log(
        "quarter,time,team,description,score\n\
         Q1,11:40,B,Bo Smith makes a layup,0:2\n\
         Q1,11:20,A,Al Horford makes a layup,2:2\n\
         Q1,11:00,A,Al Horford misses a jump shot,2:2\n\
         Q1,10:40,A,Al Horford makes a three-point jumper,5:2\n\
         Q1,10:20,A,Al Horford makes a three-point jumper,8:2\n\
         Q1,10:00,B,Bo Smith makes a layup,8:4\n\
         Q1,9:40,A,Cy Young makes a layup,10:4\n\
         Q1,9:20,A,Al Horford makes a layup,12:4\n",
        "A",
    );
    let analysis = analyze(&log, &KeeConfig::default(), None).unwrap();
    let runs: Vec<_> = analysis
        .key_events
        .iter()
        .filter(|e| e.action == KeyEventKind::ConsecutivePoints)
        .collect();
    assert_eq!(runs.len(), 1, "{runs:?}");
    assert_eq!(runs[0].player.as_deref(), Some("Al Horford"));
    assert_eq!(runs[0].result, 8);
}

#[test]
fn key_events_sit_inside_their_segments() {
    for (file, home) in [
        ("q1_76ers_at_pelicans.csv", "Pelicans"),
        ("lakers_vs_celtics.csv", "Lakers"),
    ] {
        let log = csv_log(&read_fixture(file), home);
        for whole_game in [false, true] {
            let config = KeeConfig {
                whole_game,
                ..KeeConfig::default()
            };
            let analysis = analyze(&log, &config, None).unwrap();
            for e in &analysis.key_events {
                let seg = analysis
                    .scopes
                    .iter()
                    .find(|s| s.series.scope == e.scope)
                    .unwrap();
                let g = &seg.segments[e.segment];
                assert!(seg.series.t(g.start) <= e.time && e.time <= seg.series.t(g.end));
                assert!(e.team == log.home_team || e.team == log.away_team);
                if let Some(p) = &e.player {
                    assert!(log.events.iter().any(|ev| ev.actor.as_ref() == Some(p)));
                }
                assert!(!matches!(
                    e.action,
                    KeyEventKind::SignificantScore2 | KeyEventKind::SignificantScore3
                ));
            }
        }
    }
}

#[test]
fn roster_filter_drops_unknown_players() {
    let log = q1_fixture();
    let kg = courtside::kg::KnowledgeGraph::load(&common::fixture("kg.json")).unwrap();
    let config = KeeConfig::default();
    let seg = segment_with(score_diff_series(&log, Scope::Quarter(1)).unwrap(), &config);
    let all = extract_key_events(&log, &seg, &config, None);
    let filtered = extract_key_events(&log, &seg, &config, Some(&kg));
    assert!(filtered.len() <= all.len());
    assert!(filtered
        .iter()
        .any(|e| e.player.as_deref() == Some("Joel Embiid")));
}

fn arb_walk() -> impl Strategy<Value = Vec<(i64, i64)>> {
    (
        -15i64..=15,
        proptest::collection::vec((1i64..=60, -4i64..=4), 0..80),
    )
        .prop_map(|(start, steps)| {
            let mut t = 0;
            let mut d = start;
            let mut out = vec![(t, d)];
            for (dt, dd) in steps {
                t += dt;
                d += dd;
                out.push((t, d));
            }
            out
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn segments_partition_the_series(pts in arb_walk()) {
        let s = to_series(&pts);
        let segs = segment(&s);
        prop_assert_eq!(segs[0].start, 0);
        prop_assert_eq!(segs.last().unwrap().end, s.len() - 1);
        for w in segs.windows(2) {
            prop_assert_eq!(w[1].start, w[0].end + 1);
        }
        for g in &segs {
            prop_assert!(g.start <= g.end);
            prop_assert!(g.label.possible_phases().contains(&g.phase));
        }
        prop_assert_eq!(segs.len(), segs[0].label.segment_count());
    }

    #[test]
    fn swapping_sides_mirrors_labels(pts in arb_walk()) {
        let s = to_series(&pts);
        let a = segment(&s);
        let b = segment(&s.negated());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.start, x.end), (y.start, y.end));
            prop_assert_eq!(x.label.mirrored(), y.label);
            prop_assert_eq!(x.phase.mirrored(), y.phase);
        }
    }

    #[test]
    fn snapping_follows_the_sixths(pts in arb_walk(), pick in 0usize..1000) {
        let s = to_series(&pts);
        let n = s.len() - 1;
        let k = pick % s.len();
        let kt = KeyTimes { key_time_1: k, key_time_2: k, snapped_1: false, snapped_2: false };
        let out = snap_key_times(&s, kt);
        let span = pts[n].0 - pts[0].0;
        let off = pts[k].0 - pts[0].0;
        let expected = if span == 0 || 6 * off < span {
            0
        } else if 6 * (span - off) < span {
            n
        } else {
            k
        };
        prop_assert_eq!(out.key_time_1, expected);
        prop_assert_eq!(out.snapped_1, expected != k || span == 0 || 6 * off < span || 6 * (span - off) < span);
    }
}

#[test]
fn snapping_exact_boundaries_stay() {
    // scope [0, 600]: one sixth is 100 s
    for (t, expected) in [(99.0, 0), (100.0, 1), (300.0, 1), (500.0, 1), (501.0, 2)] {
        let s = ScoreSeries::from_points(&[(0.0, 0), (t, 1), (600.0, 0)]);
        let kt = KeyTimes {
            key_time_1: 1,
            key_time_2: 1,
            snapped_1: false,
            snapped_2: false,
        };
        assert_eq!(snap_key_times(&s, kt).key_time_1, expected, "t = {t}");
    }
}
