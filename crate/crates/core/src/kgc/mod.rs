//! Few-shot knowledge graph completion.
//!
//! A relation is described by K support pairs. A convolutional meta-learner
//! turns the support set into a relation vector, a small transformer encodes
//! (head, relation, tail) triples, and candidates are ranked by the
//! translation distance `‖H + R - T‖`. Training minimises a margin loss
//! against tail-corrupted negatives with plain SGD.

mod checkpoint;
mod gradcheck;
mod model;
mod synthetic;
pub mod tape;
pub mod tensor;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, gradcheck_fixture, GradCheckReport};
pub use model::{
    encode_triple, fuse_position, hinge_sum, initial_relation, loss_and_grads, rank_tails,
    relation_meta, score, task_loss, EmbeddingTable, EncodedTriple, FewShotTask, Gradients,
    ModelParams, RelationMeta,
};
pub use synthetic::{synthetic_cycle, SyntheticBenchmark};
pub use tensor::Tensor;
pub use train::{fit, hits_at_1, negative_sample, tasks_from_kg, train, TrainReport, TrainingTask};

#[derive(Debug, Error)]
pub enum KgcError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("INVALID_EPSILON: epsilon must lie in (0, 1e-2], got {0}")]
    InvalidEpsilon(f64),
    #[error("entity pool too small to draw a negative for tail `{0}`")]
    PoolTooSmall(String),
    #[error("{queries} queries but {negatives} negatives")]
    UnpairedNegatives { queries: usize, negatives: usize },
    #[error("negative {0} does not corrupt only the tail of its query")]
    BadNegative(usize),
    #[error("loss diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("invalid kgc config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Model shape and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgcConfig {
    /// Embedding width.
    pub dim: usize,
    /// Support pairs per task.
    pub support_size: usize,
    /// Transformer layers.
    pub layers: usize,
    pub heads: usize,
    /// Feed-forward width as a multiple of `dim`.
    pub ffn_mult: usize,
    pub channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub pool: usize,
    /// Margin of the ranking loss.
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub ln_eps: f64,
}

impl Default for KgcConfig {
    fn default() -> Self {
        KgcConfig {
            dim: 16,
            support_size: 3,
            layers: 1,
            heads: 2,
            ffn_mult: 4,
            channels: 4,
            kernel_h: 2,
            kernel_w: 3,
            pool: 2,
            margin: 1.0,
            lr: 0.05,
            epochs: 400,
            seed: 42,
            ln_eps: 1e-5,
        }
    }
}

impl KgcConfig {
    /// Width of the flattened feature map fed to the meta-learner's affine map.
    pub fn feature_width(&self) -> usize {
        let out_h = 2 - self.kernel_h + 1;
        let out_w = self.dim + 1 - self.kernel_w;
        self.channels * out_h * (out_w / self.pool)
    }

    // negated comparisons so that NaN fails them too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), KgcError> {
        let bad = |m: &str| Err(KgcError::InvalidConfig(m.to_owned()));
        if self.dim == 0 || self.support_size == 0 || self.layers == 0 {
            return bad("dim, support_size and layers must be positive");
        }
        if self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return bad("heads must divide dim");
        }
        if self.ffn_mult == 0 || self.channels == 0 || self.pool == 0 {
            return bad("ffn_mult, channels and pool must be positive");
        }
        if !(1..=2).contains(&self.kernel_h) {
            return bad("kernel_h must be 1 or 2");
        }
        if self.kernel_w == 0
            || self.kernel_w > self.dim
            || (self.dim + 1 - self.kernel_w) < self.pool
        {
            return bad("kernel_w and pool leave no features");
        }
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return bad("margin must be positive");
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad("lr must be non-negative");
        }
        if !(self.ln_eps > 0.0) {
            return bad("ln_eps must be positive");
        }
        Ok(())
    }
}
