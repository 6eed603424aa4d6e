use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::kge::EmbeddingModel;

/// Entities `c` whose `(c, r_x, ô_x)` the base model does not rank first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub entities: Vec<EntityId>,
    pub prediction: Triple,
}

/// Samples up to `size` target entities uniformly without replacement.
///
/// Eligible entities are `c ≠ s_x` with `rank(c, r_x, ô_x) > 1` whose triple
/// is not already a known fact.
pub fn build_target_set(
    kg: &KnowledgeGraph,
    model: &EmbeddingModel,
    prediction: &Triple,
    size: usize,
    seed: u64,
) -> Result<TargetSet> {
    if size == 0 {
        return Err(Error::config("target set size must be at least 1"));
    }
    kg.check_triple(prediction)?;
    let mut pool = Vec::new();
    for c in 0..kg.num_entities() {
        if c == prediction.subject {
            continue;
        }
        let t = Triple::new(c, prediction.relation, prediction.object);
        if kg.contains(&t) {
            continue;
        }
        if model.object_rank(kg, &t)? > 1 {
            pool.push(c);
        }
    }
    if pool.is_empty() {
        return Err(Error::domain("no entity is eligible as a target"));
    }
    if pool.len() < size {
        log::warn!("only {} eligible targets (requested {size})", pool.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(size);
    Ok(TargetSet {
        entities: pool,
        prediction: *prediction,
    })
}
