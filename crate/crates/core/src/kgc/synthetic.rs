use rand::seq::SliceRandom;

use super::train::TrainingTask;
use crate::rng::substream;

/// A cycle of entities joined by one deterministic `successor` relation,
/// with a few pairs held out for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub entities: Vec<String>,
    pub tasks: Vec<TrainingTask>,
    pub heldout: Vec<(String, String)>,
    /// Support set used when ranking held-out pairs.
    pub eval_support: Vec<(String, String)>,
}

impl SyntheticBenchmark {
    /// Every entity except `head`.
    pub fn candidates(&self, head: &str) -> Vec<String> {
        self.entities
            .iter()
            .filter(|e| *e != head)
            .cloned()
            .collect()
    }
}

/// `n` entities `c00..`, pairs `(c_i, c_{i+1 mod n})`. `heldout` pairs are
/// set aside; the rest are split into `tasks` tasks that share all training
/// pairs but draw different supports of size `k`.
pub fn synthetic_cycle(
    n: usize,
    k: usize,
    heldout: usize,
    tasks: usize,
    seed: u64,
) -> SyntheticBenchmark {
    assert!(n > k + heldout + 1, "cycle too short for the split");
    let entities: Vec<String> = (0..n).map(|i| format!("c{i:02}")).collect();
    let mut pairs: Vec<(String, String)> = (0..n)
        .map(|i| (entities[i].clone(), entities[(i + 1) % n].clone()))
        .collect();
    let mut rng = substream(seed, "kgc.synthetic");
    pairs.shuffle(&mut rng);
    let held: Vec<(String, String)> = pairs.split_off(n - heldout);
    let train_pairs = pairs;
    let mut out = Vec::with_capacity(tasks);
    for _ in 0..tasks {
        let mut p = train_pairs.clone();
        p.shuffle(&mut rng);
        let queries = p.split_off(k);
        out.push(TrainingTask {
            relation: "successor".into(),
            support: p,
            queries,
            pool: entities.clone(),
        });
    }
    let eval_support = out[0].support.clone();
    SyntheticBenchmark {
        entities,
        tasks: out,
        heldout: held,
        eval_support,
    }
}
