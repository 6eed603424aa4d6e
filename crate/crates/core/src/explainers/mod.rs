//! Search algorithms that propose and evaluate candidate explanations.
//!
//! Every algorithm returns an [`ExplanationRun`]: the evaluated candidates
//! with their Ψ and retrain cost, the Pareto front over them, and cost
//! counters. Heuristics order candidates without retraining and then
//! evaluate only the ones they pick.

mod builder;
mod exhaustive;
mod heuristics;
mod prefilter;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{
    effectiveness_c_sufficient, effectiveness_latent, effectiveness_necessary,
    effectiveness_sufficient, pareto_front, CandidateExplanation, EffectivenessResult, Evaluator,
    EvaluatorKind, Mode, ParetoFront, Polarity, TargetSet,
};
use crate::kg::Triple;
use crate::space::Preset;

pub use builder::{annealing_order, variable_length_builder};
pub use exhaustive::{exhaustive_length1, exhaustive_over};
pub use heuristics::{
    criage_first_order, data_poisoning_direct, first_order_estimate, poisoning_score,
};
pub use prefilter::prefilter_topk;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    ExhaustiveLength1,
    DataPoisoning,
    Criage,
    Builder,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::ExhaustiveLength1 => "exhaustive-length1",
            Algorithm::DataPoisoning => "data-poisoning",
            Algorithm::Criage => "criage",
            Algorithm::Builder => "builder",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Algorithm::ExhaustiveLength1,
            Algorithm::DataPoisoning,
            Algorithm::Criage,
            Algorithm::Builder,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainerConfig {
    pub algorithm: Algorithm,
    /// Search space for the exhaustive oracle.
    pub space: Preset,
    pub max_length: usize,
    pub prefilter_k: usize,
    pub evaluator: EvaluatorKind,
    /// Weight of the perturbed score in the poisoning ranking.
    pub poisoning_lambda: f64,
    /// Step of the subject perturbation along the score gradient.
    pub poisoning_step: f64,
    /// Number of heuristic picks that get evaluated.
    pub top_m: usize,
    /// Learning-rate-like step of the first-order influence estimate.
    pub influence_step: f64,
    /// The builder stops once a candidate reaches this Ψ.
    pub threshold: f64,
    /// Most candidates evaluated per length above one.
    pub per_length_budget: usize,
    /// Above this many combinations of a length, annealing replaces full
    /// enumeration.
    pub enumeration_cap: usize,
    pub annealing_cooling: f64,
    pub annealing_proposals: usize,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::ExhaustiveLength1,
            space: Preset::Incident,
            max_length: 4,
            prefilter_k: 20,
            evaluator: EvaluatorKind::FullRetrain,
            poisoning_lambda: 1.0,
            poisoning_step: 0.1,
            top_m: 1,
            influence_step: 0.1,
            threshold: 1.0,
            per_length_budget: 20,
            enumeration_cap: 2_000,
            annealing_cooling: 0.9,
            annealing_proposals: 50,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.max_length) {
            return Err(Error::config("max_length must lie in 1..=4"));
        }
        if self.prefilter_k == 0 {
            return Err(Error::config("prefilter_k must be at least 1"));
        }
        if self.top_m == 0 || self.per_length_budget == 0 {
            return Err(Error::config(
                "top_m and per_length_budget must be at least 1",
            ));
        }
        let scalars = [
            ("poisoning_lambda", self.poisoning_lambda),
            ("poisoning_step", self.poisoning_step),
            ("influence_step", self.influence_step),
            ("annealing_cooling", self.annealing_cooling),
        ];
        if let Some((name, _)) = scalars.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::config(format!("{name} must be finite")));
        }
        if self.threshold.is_nan() {
            return Err(Error::config("threshold must not be NaN"));
        }
        if !(self.annealing_cooling > 0.0 && self.annealing_cooling < 1.0) {
            return Err(Error::config("annealing_cooling must lie in (0, 1)"));
        }
        if self.annealing_proposals == 0 {
            return Err(Error::config("annealing_proposals must be at least 1"));
        }
        Ok(())
    }

    fn check_evaluator(&self, ev: &Evaluator<'_>) -> Result<()> {
        self.validate()?;
        if ev.kind() != self.evaluator {
            return Err(Error::config(format!(
                "explainer expects the {:?} evaluator but got {:?}",
                self.evaluator,
                ev.kind()
            )));
        }
        Ok(())
    }
}

/// What Ψ measures for a run, with the inputs that measure needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Objective {
    Necessary,
    Sufficient,
    CSufficient { targets: TargetSet },
    Latent { polarity: Polarity },
}

impl Objective {
    pub fn mode(&self) -> Mode {
        match self {
            Objective::Necessary => Mode::Necessary,
            Objective::Sufficient => Mode::Sufficient,
            Objective::CSufficient { .. } => Mode::CSufficient,
            Objective::Latent {
                polarity: Polarity::Positive,
            } => Mode::LatentPositive,
            Objective::Latent {
                polarity: Polarity::Negative,
            } => Mode::LatentNegative,
        }
    }

    pub fn evaluate(
        &self,
        ev: &Evaluator<'_>,
        prediction: &Triple,
        x: &[Triple],
    ) -> Result<EffectivenessResult> {
        match self {
            Objective::Necessary => effectiveness_necessary(ev, prediction, x),
            Objective::Sufficient => effectiveness_sufficient(ev, prediction, x),
            Objective::CSufficient { targets } => {
                effectiveness_c_sufficient(ev, prediction, x, targets)
            }
            Objective::Latent { polarity } => effectiveness_latent(ev, prediction, x, *polarity),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub explanation: CandidateExplanation,
    pub result: EffectivenessResult,
    /// Retrains this evaluation actually ran (0 on a cache hit).
    pub retrains: usize,
}

/// Heuristic value of a candidate before any retraining.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicScore {
    pub triple: Triple,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRun {
    pub algorithm: Algorithm,
    pub config: ExplainerConfig,
    pub prediction: Triple,
    pub mode: Mode,
    pub candidates: Vec<CandidateRecord>,
    /// Index into `candidates` of the most effective one.
    pub best: Option<usize>,
    pub front: ParetoFront,
    /// Heuristic ordering over the whole candidate pool, when one was used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranking: Vec<HeuristicScore>,
    pub retrains: usize,
    pub evaluations: usize,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ExplanationRun {
    pub fn best_candidate(&self) -> Option<&CandidateRecord> {
        self.best.map(|i| &self.candidates[i])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Accumulates evaluated candidates and meters evaluator cost.
pub(crate) struct RunRecorder<'e, 'a> {
    ev: &'e Evaluator<'a>,
    objective: &'e Objective,
    prediction: Triple,
    started: Instant,
    retrains_at_start: usize,
    candidates: Vec<CandidateRecord>,
    warnings: Vec<String>,
}

impl<'e, 'a> RunRecorder<'e, 'a> {
    pub(crate) fn new(ev: &'e Evaluator<'a>, objective: &'e Objective, prediction: Triple) -> Self {
        Self {
            ev,
            objective,
            prediction,
            started: Instant::now(),
            retrains_at_start: ev.retrain_count(),
            candidates: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn evaluate(&mut self, explanation: CandidateExplanation) -> Result<f64> {
        let before = self.ev.retrain_count();
        let result = self
            .objective
            .evaluate(self.ev, &self.prediction, explanation.triples())?;
        let psi = result.psi;
        self.candidates.push(CandidateRecord {
            explanation,
            result,
            retrains: self.ev.retrain_count() - before,
        });
        Ok(psi)
    }

    pub(crate) fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub(crate) fn candidates(&self) -> &[CandidateRecord] {
        &self.candidates
    }

    /// Best is the highest Ψ, earliest evaluated on ties.
    pub(crate) fn finish(
        self,
        algorithm: Algorithm,
        config: &ExplainerConfig,
        ranking: Vec<HeuristicScore>,
    ) -> Result<ExplanationRun> {
        let best = self
            .candidates
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, c)| match acc {
                Some((_, p)) if p >= c.result.psi => acc,
                _ => Some((i, c.result.psi)),
            })
            .map(|(i, _)| i);
        let front = if self.candidates.is_empty() {
            ParetoFront::default()
        } else {
            let pairs: Vec<_> = self
                .candidates
                .iter()
                .map(|c| (c.explanation.clone(), c.result.clone()))
                .collect();
            pareto_front(&pairs)?
        };
        Ok(ExplanationRun {
            algorithm,
            config: config.clone(),
            prediction: self.prediction,
            mode: self.objective.mode(),
            evaluations: self.candidates.len(),
            retrains: self.ev.retrain_count() - self.retrains_at_start,
            candidates: self.candidates,
            best,
            front,
            ranking,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            warnings: self.warnings,
        })
    }
}

pub(crate) fn singleton(t: Triple, provenance: Preset) -> CandidateExplanation {
    CandidateExplanation::singleton(t, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for a in [
            Algorithm::ExhaustiveLength1,
            Algorithm::DataPoisoning,
            Algorithm::Criage,
            Algorithm::Builder,
        ] {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("kelpie".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExplainerConfig::default().validate().is_ok());
        let bad = |f: fn(&mut ExplainerConfig)| {
            let mut c = ExplainerConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.max_length = 0));
        assert!(bad(|c| c.max_length = 5));
        assert!(bad(|c| c.prefilter_k = 0));
        assert!(bad(|c| c.poisoning_lambda = f64::NAN));
        assert!(bad(|c| c.influence_step = f64::INFINITY));
        let c = ExplainerConfig {
            threshold: f64::NEG_INFINITY,
            ..Default::default()
        };
        assert!(c.validate().is_ok());
    }
}
