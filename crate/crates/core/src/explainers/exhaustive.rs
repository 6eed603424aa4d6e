use crate::error::{Error, Result};
use crate::explain::Evaluator;
use crate::explainers::{
    singleton, Algorithm, ExplainerConfig, ExplanationRun, Objective, RunRecorder,
};
use crate::kg::Triple;
use crate::space::{Preset, SearchSpace};

/// Evaluates every singleton of `space`. The best is the highest Ψ, lowest
/// triple id on ties.
pub fn exhaustive_length1(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    space: &SearchSpace,
    objective: &Objective,
    config: &ExplainerConfig,
) -> Result<ExplanationRun> {
    let members: Vec<Triple> = space.iter(ev.kg()).collect();
    exhaustive_over(ev, prediction, &members, space.preset(), objective, config)
}

/// [`exhaustive_length1`] over an explicit candidate list, in the given
/// order.
pub fn exhaustive_over(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    candidates: &[Triple],
    provenance: Preset,
    objective: &Objective,
    config: &ExplainerConfig,
) -> Result<ExplanationRun> {
    config.check_evaluator(ev)?;
    if candidates.is_empty() {
        return Err(Error::domain("search space is empty"));
    }
    let mut rec = RunRecorder::new(ev, objective, *prediction);
    for &t in candidates {
        rec.evaluate(singleton(t, provenance))?;
    }
    rec.finish(Algorithm::ExhaustiveLength1, config, Vec::new())
}
