use serde::Serialize;

use super::model::{loss_and_grads, task_loss, EmbeddingTable, FewShotTask, ModelParams};
use super::train::negative_sample;
use super::{KgcConfig, KgcError};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor and flat index of the worst entry.
    pub worst: String,
    pub checked: usize,
    pub loss: f64,
}

/// Compares analytic gradients of the task loss against central differences
/// for every model tensor entry and every embedding entry. Relative error is
/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check(
    params: &ModelParams,
    emb: &EmbeddingTable,
    task: &FewShotTask,
    epsilon: f64,
) -> Result<GradCheckReport, KgcError> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(KgcError::InvalidEpsilon(epsilon));
    }
    let (loss, grads) = loss_and_grads(task, params, emb)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
        loss,
    };
    let mut note = |name: String, analytic: f64, numeric: f64| {
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        report.checked += 1;
        if rel > report.max_rel_error || report.worst.is_empty() {
            report.max_rel_error = report.max_rel_error.max(rel);
            report.worst = name;
        }
    };

    let mut p = params.clone();
    for (name, g) in &grads.params {
        for i in 0..g.len() {
            let orig = p.get(name).data[i];
            p.get_mut(name).data[i] = orig + epsilon;
            let up = task_loss(task, &p, emb)?;
            p.get_mut(name).data[i] = orig - epsilon;
            let down = task_loss(task, &p, emb)?;
            p.get_mut(name).data[i] = orig;
            note(
                format!("{name}[{i}]"),
                g.data[i],
                (up - down) / (2.0 * epsilon),
            );
        }
    }
    let mut e = emb.clone();
    for i in 0..grads.embeddings.len() {
        let orig = e.vectors.data[i];
        e.vectors.data[i] = orig + epsilon;
        let up = task_loss(task, params, &e)?;
        e.vectors.data[i] = orig - epsilon;
        let down = task_loss(task, params, &e)?;
        e.vectors.data[i] = orig;
        note(
            format!("embeddings[{i}]"),
            grads.embeddings.data[i],
            (up - down) / (2.0 * epsilon),
        );
    }
    Ok(report)
}

/// Small seeded instance: dim 4, one support pair, one layer, two queries.
/// The margin is wide enough that both hinges are active.
pub fn gradcheck_fixture(seed: u64) -> (ModelParams, EmbeddingTable, FewShotTask) {
    let config = KgcConfig {
        dim: 4,
        support_size: 1,
        layers: 1,
        margin: 5.0,
        seed,
        ..KgcConfig::default()
    };
    let mut rng = substream(seed, "kgc.gradcheck");
    let params = ModelParams::init(&config, &mut rng).expect("valid fixture config");
    let ids: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
    let emb = EmbeddingTable::random(&ids, config.dim, &mut rng);
    let pair = |a: usize, b: usize| (ids[a].clone(), ids[b].clone());
    let queries = vec![pair(1, 2), pair(2, 3)];
    let negatives = negative_sample(&queries, &ids, &mut rng).expect("pool of six");
    let task = FewShotTask {
        relation: "next".into(),
        support: vec![pair(0, 1)],
        queries,
        negatives,
    };
    (params, emb, task)
}
