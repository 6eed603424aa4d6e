use crate::error::Result;
use crate::explain::Evaluator;
use crate::explainers::{
    singleton, Algorithm, ExplainerConfig, ExplanationRun, HeuristicScore, Objective, RunRecorder,
};
use crate::kg::Triple;
use crate::kge::{batch_objective, queries_for, EmbeddingModel, Gradient};
use crate::space::{Preset, SearchSpace};

fn shifted_subject(
    model: &EmbeddingModel,
    prediction: &Triple,
    step: f64,
) -> Result<EmbeddingModel> {
    let g = model.grad_score_wrt_subject(prediction)?;
    let mut shifted = model.clone();
    for (x, gx) in shifted.entity_mut(prediction.subject).iter_mut().zip(&g) {
        *x -= step * gx;
    }
    Ok(shifted)
}

/// `f(t) - λ f̃(t)`, where `f̃` scores with the subject embedding moved by
/// `-step · ∂f(prediction)/∂e_s`.
pub fn poisoning_score(
    model: &EmbeddingModel,
    prediction: &Triple,
    t: &Triple,
    lambda: f64,
    step: f64,
) -> Result<f64> {
    let shifted = shifted_subject(model, prediction, step)?;
    Ok(model.score(t)? - lambda * shifted.score(t)?)
}

fn ranked(mut scores: Vec<HeuristicScore>, descending: bool) -> Vec<HeuristicScore> {
    scores.sort_by(|a, b| {
        if descending {
            b.score.total_cmp(&a.score)
        } else {
            a.score.total_cmp(&b.score)
        }
    });
    scores
}

fn evaluate_top(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    objective: &Objective,
    config: &ExplainerConfig,
    algorithm: Algorithm,
    provenance: Preset,
    ranking: Vec<HeuristicScore>,
) -> Result<ExplanationRun> {
    let mut rec = RunRecorder::new(ev, objective, *prediction);
    if ranking.is_empty() {
        rec.warn(format!(
            "{algorithm}: no eligible neighbouring triple for {prediction:?}"
        ));
    }
    for h in ranking.iter().take(config.top_m) {
        rec.evaluate(singleton(h.triple, provenance))?;
    }
    rec.finish(algorithm, config, ranking)
}

/// Ranks the train triples with subject `s_x` by [`poisoning_score`] and
/// evaluates the top `config.top_m`.
pub fn data_poisoning_direct(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    objective: &Objective,
    config: &ExplainerConfig,
) -> Result<ExplanationRun> {
    config.check_evaluator(ev)?;
    let (kg, model) = (ev.kg(), ev.base());
    let space = SearchSpace::build(kg, Preset::SubjectMatch, Some(prediction))?;
    let shifted = shifted_subject(model, prediction, config.poisoning_step)?;
    let scores = space
        .iter(kg)
        .map(|t| {
            Ok(HeuristicScore {
                triple: t,
                score: model.score(&t)? - config.poisoning_lambda * shifted.score(&t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_top(
        ev,
        prediction,
        objective,
        config,
        Algorithm::DataPoisoning,
        Preset::SubjectMatch,
        ranked(scores, true),
    )
}

/// First-order estimate of `f'(prediction) - f(prediction)` after removing
/// `candidate`: undoing one descent step of size `step` on the candidate's
/// loss moves the rows it shares with the prediction by `step · ∇L_t`,
/// which shifts the score by the dot product with the score gradient.
pub fn first_order_estimate(
    model: &EmbeddingModel,
    prediction: &Triple,
    candidate: &Triple,
    step: f64,
    regularization: f64,
) -> Result<f64> {
    model.check(candidate)?;
    let pg = model.score_gradient(prediction)?;
    let mut g = Gradient::zeros_like(model);
    batch_objective(
        model,
        &queries_for(model, &[*candidate]),
        regularization,
        &mut g,
    );
    let w = 2 * model.dim();
    let mut entities: Vec<usize> = vec![candidate.subject, candidate.object];
    entities.dedup();
    let mut total = 0.0;
    for e in entities {
        let lg = &g.entities[e * w..(e + 1) * w];
        if e == prediction.subject {
            total += dot(&pg.subject, lg);
        }
        if e == prediction.object {
            total += dot(&pg.object, lg);
        }
    }
    if candidate.relation == prediction.relation {
        let row = prediction.relation;
        total += dot(&pg.relation, &g.relations[row * w..(row + 1) * w]);
    }
    Ok(step * total)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ranks the train triples with object `ô_x` by [`first_order_estimate`],
/// most damaging first, and evaluates the top `config.top_m`.
pub fn criage_first_order(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    objective: &Objective,
    config: &ExplainerConfig,
) -> Result<ExplanationRun> {
    config.check_evaluator(ev)?;
    let (kg, model) = (ev.kg(), ev.base());
    let space = SearchSpace::build(kg, Preset::ObjectMatch, Some(prediction))?;
    let reg = ev.config().train.regularization;
    let scores = space
        .iter(kg)
        .map(|t| {
            Ok(HeuristicScore {
                triple: t,
                score: first_order_estimate(model, prediction, &t, config.influence_step, reg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_top(
        ev,
        prediction,
        objective,
        config,
        Algorithm::Criage,
        Preset::ObjectMatch,
        ranked(scores, false),
    )
}
