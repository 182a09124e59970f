use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{EmbeddingTable, ModelParams};
use super::tensor::Tensor;
use super::{KgcConfig, KgcError};

/// Everything needed to rank tails later: dimensions, tensors, the seed,
/// entity vectors and one support set per relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: KgcConfig,
    pub seed: u64,
    pub tensors: BTreeMap<String, Tensor>,
    pub entities: Vec<String>,
    pub embeddings: Tensor,
    pub supports: BTreeMap<String, Vec<(String, String)>>,
}

impl Checkpoint {
    pub fn new(
        params: &ModelParams,
        emb: &EmbeddingTable,
        supports: BTreeMap<String, Vec<(String, String)>>,
    ) -> Checkpoint {
        Checkpoint {
            config: params.config.clone(),
            seed: params.config.seed,
            tensors: params.tensors.clone(),
            entities: emb.ids().to_vec(),
            embeddings: emb.vectors.clone(),
            supports,
        }
    }

    pub fn into_model(self) -> Result<(ModelParams, EmbeddingTable), KgcError> {
        let params = ModelParams::from_tensors(self.config, self.tensors)?;
        let e = &self.embeddings;
        if e.rows != self.entities.len()
            || e.cols != params.config.dim
            || e.data.len() != e.rows * e.cols
        {
            return Err(KgcError::ShapeMismatch {
                what: "embeddings".into(),
                expected: (self.entities.len(), params.config.dim),
                got: e.shape(),
            });
        }
        Ok((
            params,
            EmbeddingTable::from_tensor(self.entities, self.embeddings),
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, KgcError> {
        serde_json::from_str(text).map_err(|e| KgcError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), KgcError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint, KgcError> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }
}
