use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::explain::{CandidateExplanation, Evaluator};
use crate::explainers::{
    prefilter_topk, singleton, Algorithm, ExplainerConfig, ExplanationRun, Objective, RunRecorder,
};
use crate::kg::Triple;
use crate::space::Preset;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return usize::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn relevance_of(relevance: &[f64], combo: &[usize]) -> f64 {
    combo.iter().map(|&i| relevance[i]).sum()
}

/// Distinct `k`-subsets of `0..relevance.len()` in the order a seeded
/// annealing walk over summed relevance first visits them, starting from
/// the `k` most relevant items. Each temperature runs `proposals` swap
/// moves, then the temperature is multiplied by `cooling`.
pub fn annealing_order(
    relevance: &[f64],
    k: usize,
    budget: usize,
    cooling: f64,
    proposals: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n = relevance.len();
    if k == 0 || k > n || budget == 0 {
        return Vec::new();
    }
    let mut by_relevance: Vec<usize> = (0..n).collect();
    by_relevance.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]));
    let mut current: Vec<usize> = by_relevance[..k].to_vec();
    current.sort_unstable();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([current.clone()]);
    let mut order = vec![current.clone()];
    if k == n {
        return order;
    }
    let (lo, hi) = relevance
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| {
            (l.min(r), h.max(r))
        });
    let start = (hi - lo).max(1.0);
    let mut temperature = start;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while order.len() < budget && temperature > start * 1e-4 {
        for _ in 0..proposals {
            let pos = rng.random_range(0..k);
            let outside: Vec<usize> = (0..n).filter(|i| !current.contains(i)).collect();
            let incoming = outside[rng.random_range(0..outside.len())];
            let mut next = current.clone();
            next[pos] = incoming;
            next.sort_unstable();
            let delta = relevance_of(relevance, &next) - relevance_of(relevance, &current);
            if delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp() {
                current = next;
                if seen.insert(current.clone()) {
                    order.push(current.clone());
                    if order.len() == budget {
                        break;
                    }
                }
            }
        }
        temperature *= cooling;
    }
    order
}

/// Singletons first over the prefiltered pool; then lengths 2 to
/// `max_length`, ordered by summed singleton Ψ (exhaustively when the
/// combinations fit under `enumeration_cap`, by an annealing walk
/// otherwise), at most `per_length_budget` per length. Stops once any
/// candidate reaches `threshold`.
pub fn variable_length_builder(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    objective: &Objective,
    config: &ExplainerConfig,
) -> Result<ExplanationRun> {
    config.check_evaluator(ev)?;
    if let Objective::Latent { .. } = objective {
        return Err(Error::config(
            "the builder searches training triples; latent mode is not supported",
        ));
    }
    let pool = prefilter_topk(ev.kg(), prediction, config.prefilter_k)?;
    if pool.is_empty() {
        return Err(Error::domain("prefiltered search space is empty"));
    }
    let mut rec = RunRecorder::new(ev, objective, *prediction);
    let mut relevance = Vec::with_capacity(pool.len());
    for &t in &pool {
        relevance.push(rec.evaluate(singleton(t, Preset::Incident))?);
    }
    let mut done = relevance.iter().any(|&p| p >= config.threshold);
    for len in 2..=config.max_length {
        if done || len > pool.len() {
            break;
        }
        let combos = if binomial(pool.len(), len) <= config.enumeration_cap {
            let mut all = combinations(pool.len(), len);
            all.sort_by(|a, b| relevance_of(&relevance, b).total_cmp(&relevance_of(&relevance, a)));
            all.truncate(config.per_length_budget);
            all
        } else {
            annealing_order(
                &relevance,
                len,
                config.per_length_budget,
                config.annealing_cooling,
                config.annealing_proposals,
                config.seed.wrapping_add(len as u64),
            )
        };
        for combo in combos {
            let triples: Vec<Triple> = combo.iter().map(|&i| pool[i]).collect();
            let psi = rec.evaluate(CandidateExplanation::new(triples, Preset::Incident)?)?;
            if psi >= config.threshold {
                done = true;
                break;
            }
        }
    }
    debug_assert!(rec
        .candidates()
        .iter()
        .all(|c| c.explanation.len() <= config.max_length));
    rec.finish(Algorithm::Builder, config, Vec::new())
}
