use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::kge::{EmbeddingModel, TrainConfig};

const FORMAT_VERSION: u32 = 1;

/// On-disk model: the graph fingerprint it was trained against, the
/// training configuration and the raw embedding tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kg_fingerprint: String,
    pub config: TrainConfig,
    pub model: EmbeddingModel,
}

impl Checkpoint {
    pub fn new(kg: &KnowledgeGraph, config: &TrainConfig, model: &EmbeddingModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kg_fingerprint: kg.fingerprint(),
            config: config.clone(),
            model: model.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = serde_json::to_vec(self)?;
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    /// Loads a checkpoint and checks it belongs to `kg`.
    pub fn load(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_slice(&body)?;
        if ckpt.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.format_version
            )));
        }
        let expected = kg.fingerprint();
        if ckpt.kg_fingerprint != expected {
            return Err(Error::Checkpoint(format!(
                "{} was trained on a different graph ({} != {})",
                path.display(),
                ckpt.kg_fingerprint,
                expected
            )));
        }
        let m = &ckpt.model;
        let w = 2 * m.dim;
        if m.num_entities != kg.num_entities()
            || m.num_relations != kg.num_relations()
            || m.entities.len() != m.num_entities * w
            || m.relations.len() != 2 * m.num_relations * w
        {
            return Err(Error::Checkpoint(
                "embedding tables have the wrong shape".into(),
            ));
        }
        Ok(ckpt)
    }
}
