#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgexplain_core::kge::{EmbeddingModel, TrainConfig};
use kgexplain_core::synthetic::{self, SyntheticConfig};
use kgexplain_core::{KnowledgeGraph, Triple};

pub type Row = (String, String, String);

/// Random graph with roughly 80/10/10 split; entities are labelled `e<i>`.
pub fn random_kg(entities: usize, relations: usize, triples: usize, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let (mut train, mut valid, mut test): (Vec<Row>, Vec<Row>, Vec<Row>) = Default::default();
    while seen.len() < triples {
        let s = rng.random_range(0..entities);
        let r = rng.random_range(0..relations);
        let o = rng.random_range(0..entities);
        if !seen.insert((s, r, o)) {
            continue;
        }
        let row = (format!("e{s}"), format!("r{r}"), format!("e{o}"));
        match rng.random_range(0..10) {
            0 => valid.push(row),
            1 => test.push(row),
            _ => train.push(row),
        }
    }
    KnowledgeGraph::from_labeled(&train, &valid, &test)
}

pub fn random_model(kg: &KnowledgeGraph, dim: usize, seed: u64) -> EmbeddingModel {
    EmbeddingModel::init(
        kg,
        &TrainConfig {
            dimension: dim,
            seed,
            ..Default::default()
        },
    )
    .unwrap()
}

/// Every triple of every split.
pub fn all_facts(kg: &KnowledgeGraph) -> HashSet<Triple> {
    kg.train()
        .iter()
        .chain(kg.valid())
        .chain(kg.test())
        .copied()
        .collect()
}

/// Filtered object rank computed by sorting all candidates by score.
pub fn sorted_rank(model: &EmbeddingModel, kg: &KnowledgeGraph, t: &Triple) -> usize {
    let facts = all_facts(kg);
    let target = model.score(t).unwrap();
    let mut competitors: Vec<f64> = (0..kg.num_entities())
        .filter(|&e| e != t.object && !facts.contains(&Triple::new(t.subject, t.relation, e)))
        .map(|e| model.score(&Triple::new(t.subject, t.relation, e)).unwrap())
        .collect();
    competitors.sort_by(|a, b| b.total_cmp(a));
    1 + competitors.iter().take_while(|&&s| s > target).count()
}

/// Small training setup used by the explanation tests.
pub fn small_train_config() -> TrainConfig {
    TrainConfig {
        dimension: 8,
        epochs: 60,
        batch_size: 32,
        ..Default::default()
    }
}

pub fn desk_train_config() -> TrainConfig {
    TrainConfig {
        dimension: 16,
        epochs: 100,
        batch_size: 64,
        ..Default::default()
    }
}

pub fn desk_kg() -> KnowledgeGraph {
    synthetic::generate(&SyntheticConfig::default()).unwrap()
}

/// Two loosely linked clusters; small enough for full-retrain sweeps.
pub fn tiny_kg() -> KnowledgeGraph {
    let train = [
        ("a", "likes", "b"),
        ("b", "likes", "c"),
        ("a", "friend", "c"),
        ("c", "friend", "d"),
        ("d", "likes", "a"),
        ("b", "friend", "d"),
        ("e", "likes", "f"),
        ("f", "friend", "g"),
        ("g", "likes", "e"),
        ("e", "friend", "g"),
        ("a", "friend", "e"),
        ("h", "likes", "b"),
        ("h", "friend", "c"),
    ];
    KnowledgeGraph::from_labeled(
        &train,
        &[("f", "likes", "g")],
        &[("a", "likes", "c"), ("e", "likes", "g")],
    )
}
