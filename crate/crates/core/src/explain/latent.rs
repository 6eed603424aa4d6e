//! A Bernoulli ensemble over all possible triples, obtained by
//! sigmoid-calibrating a trained scorer, and the sampler that proposes
//! likely-but-unobserved triples from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};
use crate::kge::EmbeddingModel;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `p(Y_sro = 1) = sigmoid(scale * score(s, r, o) + bias)`.
#[derive(Clone, Debug)]
pub struct GenerativeEnsemble {
    model: EmbeddingModel,
    pub scale: f64,
    pub bias: f64,
    pub warning: Option<String>,
}

impl GenerativeEnsemble {
    pub fn new(model: EmbeddingModel, scale: f64, bias: f64) -> Self {
        Self {
            model,
            scale,
            bias,
            warning: None,
        }
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn probability_of_score(&self, score: f64) -> f64 {
        sigmoid(self.scale * score + self.bias)
    }

    pub fn probability(&self, t: &Triple) -> Result<f64> {
        Ok(self.probability_of_score(self.model.score(t)?))
    }
}

const RIDGE: f64 = 1e-4;

fn penalised_nll(scores: &[f64], labels: &[bool], a: f64, b: f64) -> f64 {
    let nll: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&x, &y)| {
            let z = a * x + b;
            // log(1 + e^z) - y z, stably
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - if y { z } else { 0.0 }
        })
        .sum();
    nll + 0.5 * RIDGE * (a * a + b * b)
}

/// Maximum-likelihood `(scale, bias)` of a one-feature logistic model,
/// with a tiny ridge so separable data stays finite. Newton steps with
/// backtracking.
pub fn fit_logistic(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::domain(
            "logistic fit needs matching, non-empty scores and labels",
        ));
    }
    let (mut a, mut b) = (1.0, 0.0);
    let mut f = penalised_nll(scores, labels, a, b);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (RIDGE * a, RIDGE * b, RIDGE, 0.0, RIDGE);
        for (&x, &y) in scores.iter().zip(labels) {
            let p = sigmoid(a * x + b);
            let r = p - if y { 1.0 } else { 0.0 };
            let w = p * (1.0 - p);
            ga += r * x;
            gb += r;
            haa += w * x * x;
            hab += w * x;
            hbb += w;
        }
        let det = haa * hbb - hab * hab;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-12 {
            let (na, nb) = (a - step * da, b - step * db);
            let nf = penalised_nll(scores, labels, na, nb);
            if nf <= f {
                improved = f - nf > 0.0;
                a = na;
                b = nb;
                f = nf;
                break;
            }
            step *= 0.5;
        }
        if !improved || (da.abs() + db.abs()) * step < 1e-12 {
            break;
        }
    }
    Ok((a, b))
}

/// Fits the ensemble on `heldout` positives and one seeded corruption per
/// positive as negative.
pub fn calibrate_ensemble(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    heldout: &[Triple],
    seed: u64,
) -> Result<GenerativeEnsemble> {
    if heldout.is_empty() {
        return Err(Error::domain(
            "calibration needs at least one held-out triple",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kg.num_entities();
    let mut scores = Vec::with_capacity(2 * heldout.len());
    let mut labels = Vec::with_capacity(2 * heldout.len());
    for (i, t) in heldout.iter().enumerate() {
        scores.push(model.score(t)?);
        labels.push(true);
        for _ in 0..100 {
            let e = rng.random_range(0..n);
            let c = if i % 2 == 0 {
                Triple::new(t.subject, t.relation, e)
            } else {
                Triple::new(e, t.relation, t.object)
            };
            if !kg.contains(&c) {
                scores.push(model.score(&c)?);
                labels.push(false);
                break;
            }
        }
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo == 0.0 {
        let msg = "all calibration scores are identical; using identity scale".to_owned();
        log::warn!("{msg}");
        let mut ens = GenerativeEnsemble::new(model.clone(), 1.0, 0.0);
        ens.warning = Some(msg);
        return Ok(ens);
    }
    let (scale, bias) = fit_logistic(&scores, &labels)?;
    Ok(GenerativeEnsemble::new(model.clone(), scale, bias))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentCandidate {
    pub triple: Triple,
    pub probability: f64,
}

/// Unobserved triples with `p ≥ 1 - epsilon`, most probable first (ties by
/// triple id), truncated to `budget`.
pub fn sample_latent_candidates(
    ensemble: &GenerativeEnsemble,
    kg: &KnowledgeGraph,
    epsilon: f64,
    budget: usize,
) -> Result<Vec<LatentCandidate>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config("epsilon must lie in (0, 1)"));
    }
    if budget == 0 {
        return Err(Error::config("budget must be at least 1"));
    }
    let threshold = 1.0 - epsilon;
    let model = ensemble.model();
    let mut out = Vec::new();
    for s in 0..kg.num_entities() {
        for r in 0..kg.num_relations() {
            let scores = model.scores_for_query(s, r);
            for (o, &score) in scores.iter().enumerate() {
                let t = Triple::new(s, r, o);
                if kg.in_train(&t) {
                    continue;
                }
                let p = ensemble.probability_of_score(score);
                if p >= threshold {
                    out.push(LatentCandidate {
                        triple: t,
                        probability: p,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(a.triple.cmp(&b.triple))
    });
    out.truncate(budget);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_split_at_half() {
        let scores = [2.0, 3.0, 2.5, -1.0, -2.0, -0.5];
        let labels = [true, true, true, false, false, false];
        let (a, b) = fit_logistic(&scores, &labels).unwrap();
        for (&x, &y) in scores.iter().zip(&labels) {
            let p = sigmoid(a * x + b);
            assert_eq!(p > 0.5, y, "p={p} x={x}");
        }
    }

    #[test]
    fn identity_calibration_is_logistic() {
        let kg = KnowledgeGraph::from_labeled(&[("a", "r", "b")], &[], &[]);
        let model = EmbeddingModel::init(
            &kg,
            &crate::kge::TrainConfig {
                dimension: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let ens = GenerativeEnsemble::new(model.clone(), 1.0, 0.0);
        let t = Triple::new(0, 0, 1);
        let s = model.score(&t).unwrap();
        assert_eq!(ens.probability(&t).unwrap(), 1.0 / (1.0 + (-s).exp()));
    }

    #[test]
    fn sampler_rejects_bad_arguments() {
        let kg = KnowledgeGraph::from_labeled(&[("a", "r", "b")], &[], &[]);
        let model = EmbeddingModel::init(
            &kg,
            &crate::kge::TrainConfig {
                dimension: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let ens = GenerativeEnsemble::new(model, 1.0, 0.0);
        assert!(sample_latent_candidates(&ens, &kg, 0.0, 3).is_err());
        assert!(sample_latent_candidates(&ens, &kg, 1.0, 3).is_err());
        assert!(sample_latent_candidates(&ens, &kg, 0.5, 0).is_err());
    }
}
