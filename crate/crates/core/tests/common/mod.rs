//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use courtside::kee::ScoreSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// A random walk over integer seconds with spread steps of up to 3 points.
pub fn random_walk(seed: u64) -> Vec<(i64, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(1..=60);
    let mut t = 0i64;
    let mut dif = rng.random_range(-12..=12);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((t, dif));
        t += rng.random_range(1..=40);
        dif += rng.random_range(-3..=3);
    }
    out
}

pub fn to_series(points: &[(i64, i64)]) -> ScoreSeries {
    let pts: Vec<(f64, i64)> = points.iter().map(|&(t, d)| (t as f64, d)).collect();
    ScoreSeries::from_points(&pts)
}

/// What the oracle decides for one series: inclusive spans and the scope label
/// in its serialized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSegmentation {
    pub spans: Vec<(usize, usize)>,
    pub label: &'static str,
}

/// Straight-line transcription of the segmentation rules, written without
/// reference to the library code. Times are integer seconds so the sixth
/// comparisons are exact.
pub fn oracle_segment(points: &[(i64, i64)]) -> OracleSegmentation {
    let n = points.len() - 1;
    let dif = |i: usize| points[i].1;
    let t = |i: usize| points[i].0;

    // argmax and argmin, earliest wins
    let mut kmax = 0;
    let mut kmin = 0;
    for i in 1..=n {
        if dif(i) > dif(kmax) {
            kmax = i;
        }
        if dif(i) < dif(kmin) {
            kmin = i;
        }
    }

    // a key time strictly inside the first or last sixth of elapsed time snaps
    let span = t(n) - t(0);
    let snaps = |k: usize| span == 0 || 6 * (t(k) - t(0)) < span || 6 * (t(n) - t(k)) < span;
    let max_snaps = snaps(kmax);
    let min_snaps = snaps(kmin);

    let top = dif(kmax);
    let bottom = dif(kmin);

    if top - bottom > 8 && !max_snaps && !min_snaps {
        let (first, second) = if kmax < kmin {
            (kmax, kmin)
        } else {
            (kmin, kmax)
        };
        let spans = vec![(0, first), (first + 1, second), (second + 1, n)];
        let crosses_zero = top > 0 && bottom < 0;
        let never_ahead = top <= 0;
        let label = if crosses_zero {
            if kmax < kmin {
                "EXPAND_ADV_OVERTAKEN_NARROW_DISADV"
            } else {
                "EXPAND_DISADV_OVERTAKE_NARROW_ADV"
            }
        } else if never_ahead {
            if kmax < kmin {
                "NARROW_DISADV_EXPAND_DISADV_NARROW_DISADV"
            } else {
                "EXPAND_DISADV_NARROW_DISADV_EXPAND_DISADV"
            }
        } else if kmax < kmin {
            "EXPAND_ADV_NARROW_ADV_EXPAND_ADV"
        } else {
            "NARROW_ADV_EXPAND_ADV_NARROW_ADV"
        };
        return OracleSegmentation { spans, label };
    }

    if top - bottom > 8 && max_snaps != min_snaps {
        let (k, label) = if max_snaps {
            (kmin, "OVERTAKEN_THEN_REDUCE")
        } else {
            (kmax, "REBOUND_THEN_REDUCE")
        };
        return OracleSegmentation {
            spans: vec![(0, k), (k + 1, n)],
            label,
        };
    }

    let total: i64 = points.iter().map(|p| p.1).sum();
    let label = if bottom > 10 {
        "STEADY_LEAD"
    } else if top < -10 {
        "STEADY_TRAIL"
    } else if top > 0 && bottom < 0 {
        "STALEMATE"
    } else if total > 0 {
        "STEADY_LEAD"
    } else if total < 0 {
        "STEADY_TRAIL"
    } else {
        "STALEMATE"
    };
    OracleSegmentation {
        spans: vec![(0, n)],
        label,
    }
}

/// Serialized name of a serde enum value.
pub fn wire_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .unwrap()
        .as_str()
        .unwrap()
        .to_owned()
}
