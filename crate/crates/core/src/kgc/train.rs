use std::collections::BTreeMap;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{
    loss_and_grads, rank_tails, task_loss, EmbeddingTable, FewShotTask, ModelParams,
};
use super::{KgcConfig, KgcError};
use crate::kg::{EntityClass, KnowledgeGraph, RelationType};
use crate::rng::substream;

/// A task before negatives are drawn: support, queries, and the pool tails
/// are corrupted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTask {
    pub relation: String,
    pub support: Vec<(String, String)>,
    pub queries: Vec<(String, String)>,
    pub pool: Vec<String>,
}

impl TrainingTask {
    pub fn with_negatives(&self, rng: &mut impl Rng) -> Result<FewShotTask, KgcError> {
        Ok(FewShotTask {
            relation: self.relation.clone(),
            support: self.support.clone(),
            queries: self.queries.clone(),
            negatives: negative_sample(&self.queries, &self.pool, rng)?,
        })
    }
}

/// Replaces each query's tail with a different entity drawn uniformly from
/// `pool`.
pub fn negative_sample(
    queries: &[(String, String)],
    pool: &[String],
    rng: &mut impl Rng,
) -> Result<Vec<(String, String)>, KgcError> {
    queries
        .iter()
        .map(|(h, t)| {
            let choices: Vec<&String> = pool.iter().filter(|e| *e != t).collect();
            if pool.len() < 2 || choices.is_empty() {
                return Err(KgcError::PoolTooSmall(t.clone()));
            }
            let pick = choices[rng.random_range(0..choices.len())];
            Ok((h.clone(), pick.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Summed task loss per epoch, measured before each task's update.
    pub epoch_losses: Vec<f64>,
    /// Loss of the fixed validation task after each epoch.
    pub validation_losses: Vec<f64>,
}

/// Plain SGD over `tasks`, updating model tensors and entity embeddings.
/// Negatives are redrawn every epoch from the seed's `kgc.negatives` stream.
pub fn train(
    tasks: &[TrainingTask],
    validation: Option<&FewShotTask>,
    params: &mut ModelParams,
    emb: &mut EmbeddingTable,
) -> Result<TrainReport, KgcError> {
    let c = params.config.clone();
    c.validate()?;
    let mut rng = substream(c.seed, "kgc.negatives");
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(c.epochs),
        validation_losses: Vec::with_capacity(c.epochs),
    };
    for epoch in 0..c.epochs {
        let mut total = 0.0;
        for task in tasks {
            let fs = task.with_negatives(&mut rng)?;
            let (loss, grads) = loss_and_grads(&fs, params, emb)?;
            if !loss.is_finite() {
                return Err(KgcError::Divergence { epoch });
            }
            total += loss;
            if c.lr > 0.0 {
                for (name, g) in &grads.params {
                    params.get_mut(name).sub_scaled(g, c.lr);
                }
                emb.vectors.sub_scaled(&grads.embeddings, c.lr);
            }
        }
        if !params.is_finite() || !emb.vectors.is_finite() {
            return Err(KgcError::Divergence { epoch });
        }
        report.epoch_losses.push(total);
        if let Some(v) = validation {
            let vl = task_loss(v, params, emb)?;
            if !vl.is_finite() {
                return Err(KgcError::Divergence { epoch });
            }
            report.validation_losses.push(vl);
        }
        debug!("kgc epoch {epoch}: loss {total:.6}");
    }
    info!(
        "kgc trained {} epochs, final loss {:?}",
        c.epochs,
        report.epoch_losses.last()
    );
    Ok(report)
}

/// Fresh model over `entities` (initialised from the `kgc.init` stream),
/// trained on `tasks`.
pub fn fit(
    tasks: &[TrainingTask],
    entities: &[String],
    config: &KgcConfig,
) -> Result<(ModelParams, EmbeddingTable, TrainReport), KgcError> {
    config.validate()?;
    let mut rng = substream(config.seed, "kgc.init");
    let mut params = ModelParams::init(config, &mut rng)?;
    let mut emb = EmbeddingTable::random(entities, config.dim, &mut rng);
    let report = train(tasks, None, &mut params, &mut emb)?;
    Ok((params, emb, report))
}

/// Fraction of `pairs` whose true tail ranks first among `candidates(head)`.
pub fn hits_at_1(
    pairs: &[(String, String)],
    support: &[(String, String)],
    candidates: impl Fn(&str) -> Vec<String>,
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<f64, KgcError> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (h, t) in pairs {
        let ranked = rank_tails(h, support, &candidates(h), params, emb)?;
        if ranked.first().map(|r| &r.0) == Some(t) {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// One task per relation with more than `k` triples: the first `k` triples
/// after a seeded shuffle form the support set, the rest are queries.
/// Negatives come from entities of the tail's class.
pub fn tasks_from_kg(kg: &KnowledgeGraph, k: usize, seed: u64) -> Vec<TrainingTask> {
    let mut by_rel: BTreeMap<RelationType, Vec<(String, String)>> = BTreeMap::new();
    for t in kg.triples() {
        by_rel
            .entry(t.relation)
            .or_default()
            .push((t.head.clone(), t.tail.clone()));
    }
    let mut rng = substream(seed, "kgc.tasks");
    let mut out = Vec::new();
    for (rel, mut pairs) in by_rel {
        if pairs.len() <= k {
            continue;
        }
        pairs.shuffle(&mut rng);
        let class = kg
            .entity(&pairs[0].1)
            .map(|e| e.class)
            .unwrap_or(EntityClass::Team);
        let pool: Vec<String> = kg.entities_of(class).map(|e| e.id.clone()).collect();
        let queries = pairs.split_off(k);
        out.push(TrainingTask {
            relation: rel.as_str().to_owned(),
            support: pairs,
            queries,
            pool,
        });
    }
    out
}
