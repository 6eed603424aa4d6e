//! Explanations as solutions of a length-vs-effectiveness problem.
//!
//! A candidate explanation is a non-empty set of triples. A retraining
//! operator rebuilds the model on a perturbed training set (without the
//! triples, on them alone, or with them added) and an effectiveness value
//! Ψ measures how the prediction's filtered rank moved. Larger Ψ is always
//! better. Candidates are compared by Pareto dominance over `(|X|, Ψ)`.

mod effectiveness;
mod latent;
mod pareto;
mod targets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::Triple;
use crate::space::Preset;

pub use effectiveness::{
    effectiveness_c_sufficient, effectiveness_latent, effectiveness_necessary,
    effectiveness_sufficient, max_rank, Aggregate, ContextPolicy, EffectivenessConfig, Evaluator,
    Polarity, SufficientMeasure,
};
pub use latent::{
    calibrate_ensemble, fit_logistic, sample_latent_candidates, GenerativeEnsemble, LatentCandidate,
};
pub use pareto::{dominates, non_dominated, pareto_front, FrontPoint, ParetoFront};
pub use targets::{build_target_set, TargetSet};

/// Which retraining operator produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    RemoveRetrain,
    KeepOnlyRetrain,
    AddSwapRetrain,
    AddRetrain,
}

/// How retraining is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    /// Fresh model, same seed and configuration, on the modified set.
    FullRetrain,
    /// Continue from the base model updating only rows near the change.
    PostTrain,
}

/// Explanation type being searched for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Necessary,
    Sufficient,
    CSufficient,
    LatentPositive,
    LatentNegative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateExplanation {
    triples: Vec<Triple>,
    pub provenance: Preset,
}

impl CandidateExplanation {
    /// Triples are deduplicated; the set must be non-empty.
    pub fn new(mut triples: Vec<Triple>, provenance: Preset) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        triples.retain(|t| seen.insert(*t));
        if triples.is_empty() {
            return Err(Error::domain(
                "an explanation must contain at least one triple",
            ));
        }
        Ok(Self {
            triples,
            provenance,
        })
    }

    pub fn singleton(t: Triple, provenance: Preset) -> Self {
        Self {
            triples: vec![t],
            provenance,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Rank movement of one target entity under the swap-and-add operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub entity: usize,
    pub rank_before: usize,
    pub rank_after: usize,
    pub psi: f64,
    /// Swapped triples that already existed in train and were not added.
    pub skipped: Vec<Triple>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessResult {
    pub psi: f64,
    /// Base rank; for swap-and-add, the mean over targets.
    pub rank_before: f64,
    pub rank_after: f64,
    pub score_before: Option<f64>,
    pub score_after: Option<f64>,
    pub operator: Operator,
    pub evaluator: EvaluatorKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_target: Vec<TargetOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}
