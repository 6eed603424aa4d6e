use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{EffectivenessResult, EvaluatorKind, Operator, TargetOutcome, TargetSet};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::kge::{self, EmbeddingModel, TrainConfig};

/// Context kept around `X` when retraining on it alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextPolicy {
    /// Train a fresh model on `X` only.
    None,
    /// Re-learn the entities and relations of `X` from their initial values
    /// on `X` alone, with every other embedding frozen at its base value.
    FrozenNeighborhood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SufficientMeasure {
    /// `rank - rank'`: degradation is penalised, improvement rewarded.
    Signed,
    /// `-|rank - rank'|`: any movement is penalised.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    /// Mean of per-target Ψ.
    Mean,
    /// Minimum per-target Ψ: positive only if every target rank improved.
    AllDecrease,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Added triples should lower (improve) the rank.
    Positive,
    /// Added triples should raise (worsen) the rank.
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectivenessConfig {
    pub train: TrainConfig,
    pub evaluator: EvaluatorKind,
    pub context_policy: ContextPolicy,
    pub sufficient_measure: SufficientMeasure,
    /// Divide each target's rank gain by `max(rank' - 1, 1)`.
    pub normalize_target_rank: bool,
    pub aggregate: Aggregate,
    /// One retrain with all swapped copies instead of one per target.
    pub batched_targets: bool,
    /// Reuse retrained models for identical perturbations.
    pub cache: bool,
}

impl Default for EffectivenessConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            evaluator: EvaluatorKind::FullRetrain,
            context_policy: ContextPolicy::FrozenNeighborhood,
            sufficient_measure: SufficientMeasure::Signed,
            normalize_target_rank: false,
            aggregate: Aggregate::Mean,
            batched_targets: false,
            cache: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    operator: Operator,
    kind: EvaluatorKind,
    triples: Vec<Triple>,
    focus: Vec<EntityId>,
}

/// Runs retraining operators against a fixed base model and graph.
///
/// The base model is only ever read. Retrained models are memoised by
/// perturbation, and every actual retrain is counted.
pub struct Evaluator<'a> {
    kg: &'a KnowledgeGraph,
    base: &'a EmbeddingModel,
    config: EffectivenessConfig,
    retrains: AtomicUsize,
    cache: Mutex<HashMap<CacheKey, Arc<EmbeddingModel>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        kg: &'a KnowledgeGraph,
        base: &'a EmbeddingModel,
        config: EffectivenessConfig,
    ) -> Self {
        Self {
            kg,
            base,
            config,
            retrains: AtomicUsize::new(0),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn kg(&self) -> &'a KnowledgeGraph {
        self.kg
    }

    pub fn base(&self) -> &'a EmbeddingModel {
        self.base
    }

    pub fn config(&self) -> &EffectivenessConfig {
        &self.config
    }

    pub fn kind(&self) -> EvaluatorKind {
        self.config.evaluator
    }

    /// Number of retraining runs actually executed so far.
    pub fn retrain_count(&self) -> usize {
        self.retrains.load(Ordering::Relaxed)
    }

    pub fn base_rank(&self, t: &Triple) -> Result<usize> {
        self.base.object_rank(self.kg, t)
    }

    fn memo(
        &self,
        key: CacheKey,
        compute: impl FnOnce() -> Result<EmbeddingModel>,
    ) -> Result<Arc<EmbeddingModel>> {
        if self.config.cache {
            if let Some(m) = self.cache.lock().expect("cache poisoned").get(&key) {
                return Ok(Arc::clone(m));
            }
        }
        let model = Arc::new(compute()?);
        self.retrains.fetch_add(1, Ordering::Relaxed);
        if self.config.cache {
            self.cache
                .lock()
                .expect("cache poisoned")
                .insert(key, Arc::clone(&model));
        }
        Ok(model)
    }

    fn key(
        &self,
        operator: Operator,
        kind: EvaluatorKind,
        triples: &[Triple],
        focus: &[EntityId],
    ) -> CacheKey {
        let mut triples = triples.to_vec();
        triples.sort_unstable();
        triples.dedup();
        let mut focus =
            if kind == EvaluatorKind::FullRetrain && operator != Operator::KeepOnlyRetrain {
                Vec::new()
            } else {
                focus.to_vec()
            };
        focus.sort_unstable();
        focus.dedup();
        CacheKey {
            operator,
            kind,
            triples,
            focus,
        }
    }

    /// Entities updated by post-training: the focus entities, their
    /// neighbours in `G_train ∪ added`, and the entities of `x`.
    fn trainable_entities(
        &self,
        focus: &[EntityId],
        added: &[Triple],
        x: &[Triple],
    ) -> Vec<EntityId> {
        let focus_set: HashSet<_> = focus.iter().copied().collect();
        let mut out: BTreeSet<EntityId> = focus_set.iter().copied().collect();
        for t in self.kg.train().iter().chain(added) {
            if focus_set.contains(&t.subject) || focus_set.contains(&t.object) {
                out.insert(t.subject);
                out.insert(t.object);
            }
        }
        for t in x {
            out.insert(t.subject);
            out.insert(t.object);
        }
        out.into_iter().collect()
    }

    fn perturbed(
        &self,
        operator: Operator,
        x: &[Triple],
        focus: &[EntityId],
        train_set: Vec<Triple>,
        added: &[Triple],
    ) -> Result<Arc<EmbeddingModel>> {
        if train_set.is_empty() {
            return Err(Error::DegenerateTraining(
                "the perturbed training set is empty".into(),
            ));
        }
        let kind = self.kind();
        let key = self.key(operator, kind, x, focus);
        self.memo(key, || match kind {
            EvaluatorKind::FullRetrain => {
                kge::retrain_from_scratch(self.kg, &train_set, &self.config.train)
            }
            EvaluatorKind::PostTrain => {
                let trainable = self.trainable_entities(focus, added, x);
                kge::post_train(self.base, &train_set, &trainable, &self.config.train)
            }
        })
    }

    /// Model retrained on `G_train \ x`.
    pub fn model_without(&self, x: &[Triple], focus: EntityId) -> Result<Arc<EmbeddingModel>> {
        self.perturbed(
            Operator::RemoveRetrain,
            x,
            &[focus],
            self.kg.train_without(x),
            &[],
        )
    }

    /// Model retrained on `G_train ∪ added`.
    pub fn model_with(
        &self,
        operator: Operator,
        added: &[Triple],
        focus: &[EntityId],
    ) -> Result<Arc<EmbeddingModel>> {
        self.perturbed(operator, added, focus, self.kg.train_with(added), added)
    }

    /// Model retrained on `x` alone under `policy`.
    pub fn model_kept_only(
        &self,
        x: &[Triple],
        policy: ContextPolicy,
    ) -> Result<Arc<EmbeddingModel>> {
        let mut ordered: Vec<Triple> = x.to_vec();
        ordered.sort_by_key(|t| self.kg.train_id(t));
        ordered.dedup();
        let kind = match policy {
            ContextPolicy::None => EvaluatorKind::FullRetrain,
            ContextPolicy::FrozenNeighborhood => EvaluatorKind::PostTrain,
        };
        let focus: Vec<EntityId> = match policy {
            ContextPolicy::None => Vec::new(),
            ContextPolicy::FrozenNeighborhood => vec![usize::MAX],
        };
        let key = self.key(Operator::KeepOnlyRetrain, kind, x, &focus);
        self.memo(key, || match policy {
            ContextPolicy::None => kge::retrain_from_scratch(self.kg, &ordered, &self.config.train),
            ContextPolicy::FrozenNeighborhood => {
                let mut entities = vec![false; self.kg.num_entities()];
                for t in &ordered {
                    entities[t.subject] = true;
                    entities[t.object] = true;
                }
                let rows = kge::relation_rows_of(self.base, &ordered);
                kge::retrain_rows_from_init(
                    self.kg,
                    self.base,
                    &ordered,
                    &entities,
                    &rows,
                    &self.config.train,
                )
            }
        })
    }
}

/// Worst attainable filtered rank of `t` for object completion.
pub fn max_rank(kg: &KnowledgeGraph, t: &Triple) -> usize {
    let known = kg.known_objects(t.subject, t.relation);
    1 + (0..kg.num_entities())
        .filter(|&e| e != t.object && !known.contains(&e))
        .count()
}

fn check_nonempty(x: &[Triple]) -> Result<()> {
    if x.is_empty() {
        Err(Error::domain(
            "an explanation must contain at least one triple",
        ))
    } else {
        Ok(())
    }
}

fn check_in_train(kg: &KnowledgeGraph, x: &[Triple]) -> Result<()> {
    match x.iter().find(|t| !kg.in_train(t)) {
        Some(t) => Err(Error::domain(format!("{t:?} is not a training triple"))),
        None => Ok(()),
    }
}

/// Ψ of removing `x` from train: `rank' - rank`.
pub fn effectiveness_necessary(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    x: &[Triple],
) -> Result<EffectivenessResult> {
    let kg = ev.kg();
    kg.check_triple(prediction)?;
    check_nonempty(x)?;
    check_in_train(kg, x)?;
    let before = ev.base.rank(kg, prediction, kge::Direction::Object)?;
    let worst = max_rank(kg, prediction);
    if before.rank >= worst {
        return Err(Error::domain(format!(
            "prediction already has the worst attainable rank ({worst})"
        )));
    }
    let model = ev.model_without(x, prediction.subject)?;
    let after = model.rank(kg, prediction, kge::Direction::Object)?;
    Ok(EffectivenessResult {
        psi: after.rank as f64 - before.rank as f64,
        rank_before: before.rank as f64,
        rank_after: after.rank as f64,
        score_before: Some(before.score),
        score_after: Some(after.score),
        operator: Operator::RemoveRetrain,
        evaluator: ev.kind(),
        per_target: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Ψ of retraining on `x` alone: `rank - rank'` (or `-|rank - rank'|`).
pub fn effectiveness_sufficient(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    x: &[Triple],
) -> Result<EffectivenessResult> {
    let kg = ev.kg();
    kg.check_triple(prediction)?;
    check_nonempty(x)?;
    check_in_train(kg, x)?;
    let policy = ev.config().context_policy;
    let before = ev.base.rank(kg, prediction, kge::Direction::Object)?;
    let model = ev.model_kept_only(x, policy)?;
    let after = model.rank(kg, prediction, kge::Direction::Object)?;
    let delta = before.rank as f64 - after.rank as f64;
    let psi = match ev.config().sufficient_measure {
        SufficientMeasure::Signed => delta,
        SufficientMeasure::Absolute => -delta.abs(),
    };
    let mut warnings = Vec::new();
    if policy == ContextPolicy::None {
        warnings.push(
            "retrained on the explanation alone without context: likely meaningless embeddings"
                .into(),
        );
    }
    Ok(EffectivenessResult {
        psi,
        rank_before: before.rank as f64,
        rank_after: after.rank as f64,
        score_before: Some(before.score),
        score_after: Some(after.score),
        operator: Operator::KeepOnlyRetrain,
        evaluator: match policy {
            ContextPolicy::None => EvaluatorKind::FullRetrain,
            ContextPolicy::FrozenNeighborhood => EvaluatorKind::PostTrain,
        },
        per_target: Vec::new(),
        warnings,
    })
}

/// Ψ of adding `x` with `s_x` swapped for each target: mean over targets of
/// `rank(c) - rank'(c)`.
pub fn effectiveness_c_sufficient(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    x: &[Triple],
    targets: &TargetSet,
) -> Result<EffectivenessResult> {
    let kg = ev.kg();
    kg.check_triple(prediction)?;
    check_nonempty(x)?;
    if targets.prediction != *prediction {
        return Err(Error::domain(
            "target set was built for a different prediction",
        ));
    }
    if targets.entities.is_empty() {
        return Err(Error::domain("target set is empty"));
    }
    let sx = prediction.subject;
    if let Some(t) = x.iter().find(|t| !t.contains_entity(sx)) {
        return Err(Error::domain(format!(
            "{t:?} does not contain the prediction subject"
        )));
    }
    let cfg = ev.config();

    struct Swap {
        entity: EntityId,
        added: Vec<Triple>,
        skipped: Vec<Triple>,
    }
    let swaps: Vec<Swap> = targets
        .entities
        .iter()
        .map(|&c| {
            let (mut added, mut skipped) = (Vec::new(), Vec::new());
            for t in x {
                let s = t.swap_entity(sx, c);
                if kg.in_train(&s) {
                    log::info!("swapped triple {s:?} already in train; skipped for target {c}");
                    skipped.push(s);
                } else if !added.contains(&s) {
                    added.push(s);
                }
            }
            Swap {
                entity: c,
                added,
                skipped,
            }
        })
        .collect();

    let batched = if cfg.batched_targets {
        let mut all: Vec<Triple> = Vec::new();
        for s in &swaps {
            for t in &s.added {
                if !all.contains(t) {
                    all.push(*t);
                }
            }
        }
        let focus: Vec<EntityId> = swaps.iter().map(|s| s.entity).collect();
        (!all.is_empty())
            .then(|| ev.model_with(Operator::AddSwapRetrain, &all, &focus))
            .transpose()?
    } else {
        None
    };

    let mut per_target = Vec::with_capacity(swaps.len());
    for s in swaps {
        let target = Triple::new(s.entity, prediction.relation, prediction.object);
        let before = ev.base_rank(&target)?;
        let after = if s.added.is_empty() {
            before
        } else {
            let model = match &batched {
                Some(m) => Arc::clone(m),
                None => ev.model_with(Operator::AddSwapRetrain, &s.added, &[s.entity])?,
            };
            model.object_rank(kg, &target)?
        };
        let mut psi = before as f64 - after as f64;
        if cfg.normalize_target_rank {
            psi /= (after.saturating_sub(1)).max(1) as f64;
        }
        per_target.push(TargetOutcome {
            entity: s.entity,
            rank_before: before,
            rank_after: after,
            psi,
            skipped: s.skipped,
        });
    }
    let n = per_target.len() as f64;
    let psi = match cfg.aggregate {
        Aggregate::Mean => per_target.iter().map(|t| t.psi).sum::<f64>() / n,
        Aggregate::AllDecrease => per_target
            .iter()
            .map(|t| t.psi)
            .fold(f64::INFINITY, f64::min),
    };
    Ok(EffectivenessResult {
        psi,
        rank_before: per_target.iter().map(|t| t.rank_before as f64).sum::<f64>() / n,
        rank_after: per_target.iter().map(|t| t.rank_after as f64).sum::<f64>() / n,
        score_before: None,
        score_after: None,
        operator: Operator::AddSwapRetrain,
        evaluator: ev.kind(),
        per_target,
        warnings: Vec::new(),
    })
}

/// Ψ of adding unobserved triples `x`: `rank - rank'` for positive
/// polarity, `rank' - rank` for negative.
pub fn effectiveness_latent(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    x: &[Triple],
    polarity: Polarity,
) -> Result<EffectivenessResult> {
    let kg = ev.kg();
    kg.check_triple(prediction)?;
    check_nonempty(x)?;
    for t in x {
        kg.check_triple(t)?;
        if kg.in_train(t) {
            return Err(Error::domain(format!("{t:?} is already a training triple")));
        }
    }
    let before = ev.base.rank(kg, prediction, kge::Direction::Object)?;
    match polarity {
        Polarity::Positive if before.rank <= 1 => {
            return Err(Error::domain(
                "positive latent explanations need a prediction ranked below 1",
            ))
        }
        Polarity::Negative if before.rank >= max_rank(kg, prediction) => {
            return Err(Error::domain(
                "negative latent explanations need a rank below the worst attainable",
            ))
        }
        _ => {}
    }
    let model = ev.model_with(Operator::AddRetrain, x, &[prediction.subject])?;
    let after = model.rank(kg, prediction, kge::Direction::Object)?;
    let delta = before.rank as f64 - after.rank as f64;
    Ok(EffectivenessResult {
        psi: match polarity {
            Polarity::Positive => delta,
            Polarity::Negative => -delta,
        },
        rank_before: before.rank as f64,
        rank_after: after.rank as f64,
        score_before: Some(before.score),
        score_after: Some(after.score),
        operator: Operator::AddRetrain,
        evaluator: ev.kind(),
        per_target: Vec::new(),
        warnings: Vec::new(),
    })
}
