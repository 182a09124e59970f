//! ROUGE-N and ROUGE-L scoring.
//!
//! Text is lowercased, punctuation characters are deleted, and the rest is
//! split on whitespace.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RougeError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch {
        candidates: usize,
        references: usize,
    },
    #[error("no reference for candidate {0}")]
    MissingReference(String),
    #[error("unknown metric `{0}` (expected a positive integer or L)")]
    UnknownMetric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{3000}'..='\u{303F}' | '\u{FF01}'..='\u{FF0F}' | '\u{FF1A}'..='\u{FF20}'
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> RougeScore {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let p = ratio(overlap, candidate);
        let r = ratio(overlap, reference);
        let f1 = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        RougeScore {
            precision: p,
            recall: r,
            f1,
        }
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// N-gram overlap with clipped counts.
pub fn rouge_n(
    candidate: &[String],
    reference: &[String],
    n: usize,
) -> Result<RougeScore, RougeError> {
    if n == 0 {
        return Err(RougeError::ZeroOrder);
    }
    if reference.len() < n {
        warn!(
            "reference has {} tokens, fewer than n = {n}; scoring zero",
            reference.len()
        );
        return Ok(RougeScore::ZERO);
    }
    if candidate.len() < n {
        return Ok(RougeScore::ZERO);
    }
    let c = ngrams(candidate, n);
    let r = ngrams(reference, n);
    let overlap: usize = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    Ok(RougeScore::from_counts(
        overlap,
        candidate.len() + 1 - n,
        reference.len() + 1 - n,
    ))
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    if candidate.is_empty() || reference.is_empty() {
        return RougeScore::ZERO;
    }
    RougeScore::from_counts(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    N(usize),
    L,
}

impl Metric {
    pub fn score(
        self,
        candidate: &[String],
        reference: &[String],
    ) -> Result<RougeScore, RougeError> {
        match self {
            Metric::N(n) => rouge_n(candidate, reference, n),
            Metric::L => Ok(rouge_l(candidate, reference)),
        }
    }

    /// Parses "1,2,L".
    pub fn parse_list(s: &str) -> Result<Vec<Metric>, RougeError> {
        s.split(',').map(|p| p.trim().parse()).collect()
    }
}

impl FromStr for Metric {
    type Err = RougeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("l") {
            return Ok(Metric::L);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(RougeError::ZeroOrder),
            Ok(n) => Ok(Metric::N(n)),
            Err(_) => Err(RougeError::UnknownMetric(s.to_owned())),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::N(n) => write!(f, "ROUGE-{n}"),
            Metric::L => f.write_str("ROUGE-L"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: Metric,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub pairs: usize,
    /// Arithmetic means over pairs.
    pub rows: Vec<MetricRow>,
    /// Per-pair F1 by metric, in pair order.
    pub per_pair: Vec<Vec<f64>>,
}

impl CorpusReport {
    pub fn f1(&self, metric: Metric) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric).map(|r| r.f1)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>9} {:>9} {:>9}\n",
            "metric", "precision", "recall", "f1"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:<10} {:>9.4} {:>9.4} {:>9.4}\n",
                r.name, r.precision, r.recall, r.f1
            ));
        }
        s
    }
}

pub fn evaluate_corpus(
    pairs: &[(String, String)],
    metrics: &[Metric],
) -> Result<CorpusReport, RougeError> {
    let mut sums = vec![(0.0, 0.0, 0.0); metrics.len()];
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (cand, refr) in pairs {
        let (c, r) = (tokenize(cand), tokenize(refr));
        let mut row = Vec::with_capacity(metrics.len());
        for (m, acc) in metrics.iter().zip(sums.iter_mut()) {
            let s = m.score(&c, &r)?;
            acc.0 += s.precision;
            acc.1 += s.recall;
            acc.2 += s.f1;
            row.push(s.f1);
        }
        per_pair.push(row);
    }
    let n = pairs.len().max(1) as f64;
    Ok(CorpusReport {
        pairs: pairs.len(),
        rows: metrics
            .iter()
            .zip(sums)
            .map(|(m, (p, r, f))| MetricRow {
                metric: *m,
                name: m.to_string(),
                precision: p / n,
                recall: r / n,
                f1: f / n,
            })
            .collect(),
        per_pair,
    })
}

fn text_files(dir: &Path) -> Result<Vec<PathBuf>, RougeError> {
    let io = |source| RougeError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Pairs files of `cand_dir` and `ref_dir` by file name.
pub fn load_pairs(cand_dir: &Path, ref_dir: &Path) -> Result<Vec<(String, String)>, RougeError> {
    let cands = text_files(cand_dir)?;
    let refs = text_files(ref_dir)?;
    if cands.len() != refs.len() {
        return Err(RougeError::LengthMismatch {
            candidates: cands.len(),
            references: refs.len(),
        });
    }
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| RougeError::Io {
            path: p.to_owned(),
            source,
        })
    };
    cands
        .iter()
        .map(|c| {
            let name = c.file_name().unwrap_or_default();
            let r = ref_dir.join(name);
            if !r.is_file() {
                return Err(RougeError::MissingReference(
                    name.to_string_lossy().into_owned(),
                ));
            }
            Ok((read(c)?, read(&r)?))
        })
        .collect()
}
