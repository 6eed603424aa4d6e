use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{CandidateExplanation, EffectivenessResult};

/// `a` dominates `b` when it is no longer and at least as effective, with
/// one of the two strict. Points are `(length, psi)`.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 >= b.1 && (a.0 < b.0 || a.1 > b.1)
}

/// Indices of the non-dominated points, in input order. Exact ties are all
/// kept.
pub fn non_dominated(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].0.total_cmp(&points[j].0));
    let mut keep = vec![false; points.len()];
    let mut best_shorter = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let len = points[order[start]].0;
        let end = start
            + order[start..]
                .iter()
                .take_while(|&&i| points[i].0 == len)
                .count();
        let group = &order[start..end];
        let group_best = group
            .iter()
            .map(|&i| points[i].1)
            .fold(f64::NEG_INFINITY, f64::max);
        for &i in group {
            keep[i] = points[i].1 == group_best && points[i].1 > best_shorter;
        }
        best_shorter = best_shorter.max(group_best);
        start = end;
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub length: usize,
    pub psi: f64,
    pub explanation: CandidateExplanation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Most effective point, shortest first on ties.
    pub fn best(&self) -> Option<&FrontPoint> {
        self.points
            .iter()
            .fold(None, |acc: Option<&FrontPoint>, p| match acc {
                Some(b) if b.psi > p.psi || (b.psi == p.psi && b.length <= p.length) => Some(b),
                _ => Some(p),
            })
    }
}

/// Non-dominated `(length, psi)` points among evaluated candidates, sorted
/// by length (input order within a length).
pub fn pareto_front(
    candidates: &[(CandidateExplanation, EffectivenessResult)],
) -> Result<ParetoFront> {
    if candidates.is_empty() {
        return Err(Error::domain("pareto front of an empty candidate list"));
    }
    let pts: Vec<(f64, f64)> = candidates
        .iter()
        .map(|(x, r)| (x.len() as f64, r.psi))
        .collect();
    let mut idx = non_dominated(&pts);
    idx.sort_by_key(|&i| candidates[i].0.len());
    Ok(ParetoFront {
        points: idx
            .into_iter()
            .map(|i| FrontPoint {
                length: candidates[i].0.len(),
                psi: candidates[i].1.psi,
                explanation: candidates[i].0.clone(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_pair_is_kept_whole() {
        assert_eq!(non_dominated(&[(1.0, 15.0), (2.0, 30.0)]), vec![0, 1]);
    }

    #[test]
    fn strict_dominance_drops_point() {
        assert_eq!(non_dominated(&[(1.0, 15.0), (2.0, 10.0)]), vec![0]);
    }

    #[test]
    fn ties_are_retained() {
        assert_eq!(
            non_dominated(&[(1.0, 3.0), (1.0, 3.0), (1.0, 2.0)]),
            vec![0, 1]
        );
        assert_eq!(non_dominated(&[(2.0, 3.0), (1.0, 3.0)]), vec![1]);
    }

    #[test]
    fn dominance_is_irreflexive() {
        assert!(!dominates((1.0, 1.0), (1.0, 1.0)));
        assert!(dominates((1.0, 2.0), (1.0, 1.0)));
        assert!(dominates((1.0, 1.0), (2.0, 1.0)));
        assert!(!dominates((1.0, 1.0), (2.0, 2.0)));
    }
}
