use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};

/// Up to `k` train triples incident to `s_x`, closest first: the distance is
/// the undirected shortest path from the triple's other endpoint to `ô_x`.
/// Unreachable endpoints come last; ties keep train order. The prediction
/// itself is never returned.
pub fn prefilter_topk(kg: &KnowledgeGraph, prediction: &Triple, k: usize) -> Result<Vec<Triple>> {
    if k == 0 {
        return Err(Error::config("prefilter K must be at least 1"));
    }
    kg.check_triple(prediction)?;
    let sx = prediction.subject;
    let dist = kg.distances_from(prediction.object);
    let mut scored: Vec<(usize, usize, Triple)> = kg
        .train()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.contains_entity(sx) && **t != *prediction)
        .map(|(id, t)| {
            let other = if t.subject == sx { t.object } else { t.subject };
            (dist[other].unwrap_or(usize::MAX), id, *t)
        })
        .collect();
    if scored.is_empty() {
        log::warn!("subject {sx} has no incident training triple");
    }
    scored.sort_unstable_by_key(|&(d, id, _)| (d, id));
    Ok(scored.into_iter().take(k).map(|(_, _, t)| t).collect())
}
