//! Full-softmax negative log-likelihood training with N3 regularisation
//! and Adagrad.
//!
//! Every training triple `(s, r, o)` contributes two queries: `(s, r) → o`
//! and the reciprocal `(o, r⁻¹) → s`. Each query is scored against every
//! entity; the loss is the cross-entropy of the true answer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::kge::{EmbeddingModel, ModelKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Adagrad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeMode {
    /// Every entity is a candidate answer of every query.
    FullSoftmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Also update relations of triples incident to the trainable entities.
    pub train_relations: bool,
}

impl Default for PostTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.1,
            train_relations: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub dimension: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the N3 penalty.
    pub regularization: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub negatives: NegativeMode,
    pub post: PostTrainConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::ComplEx,
            dimension: 32,
            epochs: 100,
            learning_rate: 0.1,
            regularization: 1e-3,
            batch_size: 512,
            seed: 42,
            optimizer: OptimizerKind::Adagrad,
            negatives: NegativeMode::FullSoftmax,
            post: PostTrainConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("regularization", self.regularization),
            ("post.learning_rate", self.post.learning_rate),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub valid_nll: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

/// One softmax query: rank `target` among all entities for `(subject, relation_row)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Query {
    pub subject: EntityId,
    pub relation_row: usize,
    pub target: EntityId,
}

pub fn queries_for(model: &EmbeddingModel, triples: &[Triple]) -> Vec<Query> {
    triples
        .iter()
        .flat_map(|t| {
            [
                Query {
                    subject: t.subject,
                    relation_row: t.relation,
                    target: t.object,
                },
                Query {
                    subject: t.object,
                    relation_row: model.inverse_row(t.relation),
                    target: t.subject,
                },
            ]
        })
        .collect()
}

/// Dense gradient buffers shaped like the model tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
}

impl Gradient {
    pub fn zeros_like(model: &EmbeddingModel) -> Self {
        Self {
            entities: vec![0.0; model.entities.len()],
            relations: vec![0.0; model.relations.len()],
        }
    }

    fn clear(&mut self) {
        self.entities.fill(0.0);
        self.relations.fill(0.0);
    }
}

fn log_softmax_nll(scores: &[f64], target: usize, probs: &mut Vec<f64>) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    probs.clear();
    probs.extend(scores.iter().map(|s| (s - max).exp()));
    let z: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= z;
    }
    max + z.ln() - scores[target]
}

/// Mean NLL of `queries` plus `reg_weight` times the N3 penalty of the
/// involved factors, divided by the batch size. Gradients are written to
/// `grad` (which is cleared first).
pub fn batch_objective(
    model: &EmbeddingModel,
    queries: &[Query],
    reg_weight: f64,
    grad: &mut Gradient,
) -> f64 {
    grad.clear();
    if queries.is_empty() {
        return 0.0;
    }
    let d = model.dim;
    let w = 2 * d;
    let inv_b = 1.0 / queries.len() as f64;
    let mut probs = Vec::with_capacity(model.num_entities);
    let mut gq = vec![0.0; w];
    let mut loss = 0.0;
    for q in queries {
        let qv = model.query_vector(q.subject, q.relation_row);
        let scores: Vec<f64> = (0..model.num_entities)
            .map(|e| model.entity(e).iter().zip(&qv).map(|(x, y)| x * y).sum())
            .collect();
        loss += log_softmax_nll(&scores, q.target, &mut probs) * inv_b;

        // d loss / d score_e = p_e - [e == target]
        gq.fill(0.0);
        for (e, &p) in probs.iter().enumerate() {
            let coef = (p - if e == q.target { 1.0 } else { 0.0 }) * inv_b;
            if coef == 0.0 {
                continue;
            }
            let row = model.entity(e);
            let grow = &mut grad.entities[e * w..(e + 1) * w];
            for k in 0..w {
                gq[k] += coef * row[k];
                grow[k] += coef * qv[k];
            }
        }

        // chain through q = e_s ⊙ w_r
        let es = model.entity(q.subject);
        let wr = model.relation_row(q.relation_row);
        let (gs_off, gr_off) = (q.subject * w, q.relation_row * w);
        for k in 0..d {
            let (a, b) = (es[k], es[d + k]);
            let (c, e) = (wr[k], wr[d + k]);
            let (gre, gim) = (gq[k], gq[d + k]);
            grad.entities[gs_off + k] += gre * c + gim * e;
            grad.entities[gs_off + d + k] += -gre * e + gim * c;
            grad.relations[gr_off + k] += gre * a + gim * b;
            grad.relations[gr_off + d + k] += -gre * b + gim * a;
        }

        if reg_weight > 0.0 {
            let coef = reg_weight * inv_b;
            for (table, off, which) in [
                (0, gs_off, q.subject),
                (1, gr_off, q.relation_row),
                (0, q.target * w, q.target),
            ] {
                let v = if table == 0 {
                    model.entity(which)
                } else {
                    model.relation_row(which)
                };
                let g = if table == 0 {
                    &mut grad.entities
                } else {
                    &mut grad.relations
                };
                for k in 0..d {
                    let (x, y) = (v[k], v[d + k]);
                    let m = (x * x + y * y).sqrt();
                    loss += coef * m * m * m;
                    g[off + k] += coef * 3.0 * x * m;
                    g[off + d + k] += coef * 3.0 * y * m;
                }
            }
        }
    }
    loss
}

/// Mean unregularised NLL over both directions of `triples`.
pub fn mean_nll(model: &EmbeddingModel, triples: &[Triple]) -> f64 {
    let queries = queries_for(model, triples);
    if queries.is_empty() {
        return 0.0;
    }
    let mut probs = Vec::new();
    let total: f64 = queries
        .iter()
        .map(|q| {
            let scores = model.scores_for_query(q.subject, q.relation_row);
            log_softmax_nll(&scores, q.target, &mut probs)
        })
        .sum();
    total / queries.len() as f64
}

/// Rows allowed to move. `None` means every row.
#[derive(Clone, Debug, Default)]
pub struct TrainableMask {
    pub entities: Option<Vec<bool>>,
    pub relation_rows: Option<Vec<bool>>,
}

impl TrainableMask {
    pub fn all() -> Self {
        Self::default()
    }
}

struct Adagrad {
    lr: f64,
    acc_e: Vec<f64>,
    acc_r: Vec<f64>,
}

impl Adagrad {
    const EPS: f64 = 1e-10;

    fn new(model: &EmbeddingModel, lr: f64) -> Self {
        Self {
            lr,
            acc_e: vec![0.0; model.entities.len()],
            acc_r: vec![0.0; model.relations.len()],
        }
    }

    fn step(&mut self, model: &mut EmbeddingModel, grad: &Gradient, mask: &TrainableMask) {
        let w = 2 * model.dim;
        let lr = self.lr;
        let apply = |params: &mut [f64], acc: &mut [f64], g: &[f64], rows: &Option<Vec<bool>>| {
            for (row, ((p, a), g)) in params
                .chunks_mut(w)
                .zip(acc.chunks_mut(w))
                .zip(g.chunks(w))
                .enumerate()
            {
                if rows.as_ref().is_some_and(|m| !m[row]) {
                    continue;
                }
                for k in 0..w {
                    if g[k] == 0.0 {
                        continue;
                    }
                    a[k] += g[k] * g[k];
                    p[k] -= lr * g[k] / (a[k].sqrt() + Self::EPS);
                }
            }
        };
        apply(
            &mut model.entities,
            &mut self.acc_e,
            &grad.entities,
            &mask.entities,
        );
        apply(
            &mut model.relations,
            &mut self.acc_r,
            &grad.relations,
            &mask.relation_rows,
        );
    }
}

fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

struct Run<'a> {
    epochs: usize,
    lr: f64,
    reg: f64,
    batch_size: usize,
    seed: u64,
    mask: &'a TrainableMask,
    record: bool,
}

fn run_epochs(
    model: &mut EmbeddingModel,
    train: &[Triple],
    valid: &[Triple],
    run: Run<'_>,
) -> Result<TrainingHistory> {
    let mut history = TrainingHistory::default();
    let queries = queries_for(model, train);
    let mut order: Vec<usize> = (0..queries.len()).collect();
    let mut rng = shuffle_rng(run.seed);
    let mut opt = Adagrad::new(model, run.lr);
    let mut grad = Gradient::zeros_like(model);
    let mut batch = Vec::with_capacity(run.batch_size);
    for epoch in 0..run.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(run.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| queries[i]));
            let loss = batch_objective(model, &batch, run.reg, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Training { epoch, loss });
            }
            opt.step(model, &grad, run.mask);
        }
        if !model.is_finite() {
            return Err(Error::Training {
                epoch,
                loss: f64::NAN,
            });
        }
        if run.record {
            let train_nll = mean_nll(model, train);
            let valid_nll = (!valid.is_empty()).then(|| mean_nll(model, valid));
            log::debug!("epoch {epoch}: train nll {train_nll:.6}");
            history.epochs.push(EpochRecord {
                epoch,
                train_nll,
                valid_nll,
            });
        }
    }
    Ok(history)
}

/// Trains `model` in place on `train`, recording per-epoch NLL on `train`
/// and `valid`.
pub fn train(
    model: &mut EmbeddingModel,
    train: &[Triple],
    valid: &[Triple],
    config: &TrainConfig,
) -> Result<TrainingHistory> {
    config.validate()?;
    run_epochs(
        model,
        train,
        valid,
        Run {
            epochs: config.epochs,
            lr: config.learning_rate,
            reg: config.regularization,
            batch_size: config.batch_size,
            seed: config.seed,
            mask: &TrainableMask::all(),
            record: true,
        },
    )
}

/// Same as [`train`] without per-epoch loss evaluation.
pub fn train_quiet(
    model: &mut EmbeddingModel,
    train: &[Triple],
    config: &TrainConfig,
) -> Result<()> {
    config.validate()?;
    run_epochs(
        model,
        train,
        &[],
        Run {
            epochs: config.epochs,
            lr: config.learning_rate,
            reg: config.regularization,
            batch_size: config.batch_size,
            seed: config.seed,
            mask: &TrainableMask::all(),
            record: false,
        },
    )?;
    Ok(())
}

/// Fresh seeded model trained on the train split of `kg`.
pub fn fit(kg: &KnowledgeGraph, config: &TrainConfig) -> Result<(EmbeddingModel, TrainingHistory)> {
    let mut model = EmbeddingModel::init(kg, config)?;
    let history = train(&mut model, kg.train(), &kg.evaluable_valid(), config)?;
    Ok((model, history))
}

/// Trains a fresh seeded model on an arbitrary training set over the
/// dictionaries of `kg`.
pub fn retrain_from_scratch(
    kg: &KnowledgeGraph,
    train_set: &[Triple],
    config: &TrainConfig,
) -> Result<EmbeddingModel> {
    if train_set.is_empty() {
        return Err(Error::DegenerateTraining("training set is empty".into()));
    }
    let mut model = EmbeddingModel::init(kg, config)?;
    train_quiet(&mut model, train_set, config)?;
    Ok(model)
}

/// Relation rows (forward and reciprocal) of train triples touching `entities`.
fn incident_relation_rows(
    model: &EmbeddingModel,
    train: &[Triple],
    entities: &[bool],
) -> Vec<bool> {
    let mut rows = vec![false; 2 * model.num_relations];
    for t in train {
        if entities[t.subject] || entities[t.object] {
            rows[t.relation] = true;
            rows[model.inverse_row(t.relation)] = true;
        }
    }
    rows
}

/// Continues training a copy of `model` on `modified_train` while every
/// embedding outside `trainable_entities` stays frozen. Relations incident
/// to the trainable entities move only when `config.post.train_relations`
/// is set. Optimiser state starts from zero.
pub fn post_train(
    model: &EmbeddingModel,
    modified_train: &[Triple],
    trainable_entities: &[EntityId],
    config: &TrainConfig,
) -> Result<EmbeddingModel> {
    config.validate()?;
    if trainable_entities.is_empty() {
        return Err(Error::config(
            "post-training needs at least one trainable entity",
        ));
    }
    if modified_train.is_empty() {
        return Err(Error::config(
            "post-training needs a non-empty training set",
        ));
    }
    let mut entities = vec![false; model.num_entities];
    for &e in trainable_entities {
        if e >= model.num_entities {
            return Err(Error::domain(format!("unknown entity id {e}")));
        }
        entities[e] = true;
    }
    let relation_rows = if config.post.train_relations {
        incident_relation_rows(model, modified_train, &entities)
    } else {
        vec![false; 2 * model.num_relations]
    };
    let mask = TrainableMask {
        entities: Some(entities),
        relation_rows: Some(relation_rows),
    };
    // Queries that touch no trainable entity only move trainable rows as
    // softmax negatives; they are skipped.
    let local: Vec<Triple> = modified_train
        .iter()
        .copied()
        .filter(|t| {
            mask.entities
                .as_ref()
                .is_some_and(|m| m[t.subject] || m[t.object])
        })
        .collect();
    let mut out = model.clone();
    run_epochs(
        &mut out,
        &local,
        &[],
        Run {
            epochs: config.post.epochs,
            lr: config.post.learning_rate,
            reg: config.regularization,
            batch_size: config.batch_size,
            seed: config.seed,
            mask: &mask,
            record: false,
        },
    )?;
    Ok(out)
}

/// Retrains a masked subset of rows from their seeded initial values while
/// all other rows keep the values of `anchor`.
pub(crate) fn retrain_rows_from_init(
    kg: &KnowledgeGraph,
    anchor: &EmbeddingModel,
    train_set: &[Triple],
    trainable_entities: &[bool],
    trainable_relation_rows: &[bool],
    config: &TrainConfig,
) -> Result<EmbeddingModel> {
    let init = EmbeddingModel::init(kg, config)?;
    let mut model = anchor.clone();
    for (e, &on) in trainable_entities.iter().enumerate() {
        if on {
            model.entity_mut(e).copy_from_slice(init.entity(e));
        }
    }
    for (r, &on) in trainable_relation_rows.iter().enumerate() {
        if on {
            model
                .relation_row_mut(r)
                .copy_from_slice(init.relation_row(r));
        }
    }
    let all_entities = trainable_entities.iter().all(|&b| b);
    let all_relations = trainable_relation_rows.iter().all(|&b| b);
    let mask = TrainableMask {
        entities: (!all_entities).then(|| trainable_entities.to_vec()),
        relation_rows: (!all_relations).then(|| trainable_relation_rows.to_vec()),
    };
    run_epochs(
        &mut model,
        train_set,
        &[],
        Run {
            epochs: config.epochs,
            lr: config.learning_rate,
            reg: config.regularization,
            batch_size: config.batch_size,
            seed: config.seed,
            mask: &mask,
            record: false,
        },
    )?;
    Ok(model)
}

pub(crate) fn relation_rows_of(model: &EmbeddingModel, triples: &[Triple]) -> Vec<bool> {
    let mut rows = vec![false; 2 * model.num_relations];
    for t in triples {
        rows[t.relation] = true;
        rows[model.inverse_row(t.relation)] = true;
    }
    rows
}
