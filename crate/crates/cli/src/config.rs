use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kgexplain_core::explain::{
    Aggregate, ContextPolicy, EffectivenessConfig, Mode, SufficientMeasure,
};
use kgexplain_core::explainers::{Algorithm, ExplainerConfig};
use kgexplain_core::kg::Split;
use kgexplain_core::kge::TrainConfig;

use crate::failure::{invalid, CmdResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub count: usize,
    pub seed: u64,
    /// Only test triples with this base rank are sampled; 0 samples any rank.
    pub cohort_rank: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            count: 50,
            seed: 0,
            cohort_rank: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    pub mode: Mode,
    pub workers: usize,
    /// Pool the best explanation of every selected triple, remove them all
    /// at once and retrain a single model per algorithm.
    pub simultaneous_removal: bool,
    pub target_size: usize,
    pub target_seed: u64,
    pub latent_epsilon: f64,
    pub latent_budget: usize,
    pub calibration_seed: u64,
    pub context_policy: ContextPolicy,
    pub sufficient_measure: SufficientMeasure,
    pub normalize_target_rank: bool,
    pub aggregate: Aggregate,
    pub batched_targets: bool,
    pub cache: bool,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        let e = EffectivenessConfig::default();
        Self {
            mode: Mode::Necessary,
            workers: 1,
            simultaneous_removal: false,
            target_size: 10,
            target_seed: 0,
            latent_epsilon: 0.1,
            latent_budget: 50,
            calibration_seed: 0,
            context_policy: e.context_policy,
            sufficient_measure: e.sufficient_measure,
            normalize_target_rank: e.normalize_target_rank,
            aggregate: e.aggregate,
            batched_targets: e.batched_targets,
            cache: e.cache,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSettings {
    pub hits_k: Vec<usize>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        Self {
            hits_k: vec![1, 2, 10],
        }
    }
}

/// One experiment: dataset, training, selection, explainers, evaluation.
/// Relative paths are resolved against the directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub explain: ExplainSettings,
    #[serde(default = "default_explainers")]
    pub explainers: Vec<ExplainerConfig>,
    #[serde(default)]
    pub evaluate: EvaluateSettings,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_explainers() -> Vec<ExplainerConfig> {
    vec![ExplainerConfig::default()]
}

/// A parsed config together with the exact text it came from.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub text: String,
}

pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CmdResult<Loaded> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| invalid(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.dataset.is_relative() {
            config.dataset = base.join(&config.dataset);
        }
        if config.output.is_relative() {
            config.output = base.join(&config.output);
        }
        if let Some(out) = &overrides.out {
            config.output = out.clone();
        }
        if let Some(w) = overrides.workers {
            config.explain.workers = w;
        }
        if let Some(seed) = overrides.seed {
            config.apply_seed(seed);
        }
        config.validate()?;
        Ok(Loaded { config, text })
    }

    /// Replaces the seed of every stochastic stage.
    pub fn apply_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.selection.seed = seed;
        self.explain.target_seed = seed;
        self.explain.calibration_seed = seed;
        for e in &mut self.explainers {
            e.seed = seed;
        }
    }

    pub fn validate(&self) -> CmdResult<()> {
        for split in [Split::Train, Split::Valid, Split::Test] {
            let p = self.dataset.join(split.file_name());
            if !p.is_file() {
                return Err(invalid(format!(
                    "dataset file {} does not exist",
                    p.display()
                )));
            }
        }
        self.train.validate()?;
        if self.selection.count == 0 {
            return Err(invalid("selection.count must be at least 1"));
        }
        if self.explain.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.explain.target_size == 0 || self.explain.latent_budget == 0 {
            return Err(invalid(
                "explain.target_size and explain.latent_budget must be at least 1",
            ));
        }
        let eps = self.explain.latent_epsilon;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("explain.latent_epsilon must lie in (0, 1)"));
        }
        if self.evaluate.hits_k.contains(&0) {
            return Err(invalid("evaluate.hits_k entries must be at least 1"));
        }
        if self.explainers.is_empty() {
            return Err(invalid("at least one [[explainers]] entry is required"));
        }
        let mut seen = HashSet::new();
        for e in &self.explainers {
            e.validate()?;
            if !seen.insert(e.algorithm) {
                return Err(invalid(format!(
                    "algorithm `{}` is listed twice",
                    e.algorithm
                )));
            }
        }
        let latent = matches!(
            self.explain.mode,
            Mode::LatentPositive | Mode::LatentNegative
        );
        if latent
            && self
                .explainers
                .iter()
                .any(|e| e.algorithm != Algorithm::ExhaustiveLength1)
        {
            return Err(invalid(
                "latent modes support only the exhaustive-length1 algorithm",
            ));
        }
        if self.explain.simultaneous_removal && self.explain.mode != Mode::Necessary {
            return Err(invalid(
                "simultaneous removal applies to necessary explanations only",
            ));
        }
        Ok(())
    }

    pub fn effectiveness(&self, explainer: &ExplainerConfig) -> EffectivenessConfig {
        let s = &self.explain;
        EffectivenessConfig {
            train: self.train.clone(),
            evaluator: explainer.evaluator,
            context_policy: s.context_policy,
            sufficient_measure: s.sufficient_measure,
            normalize_target_rank: s.normalize_target_rank,
            aggregate: s.aggregate,
            batched_targets: s.batched_targets,
            cache: s.cache,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c: ExperimentConfig = toml::from_str("dataset = \"data\"").unwrap();
        assert_eq!(c.selection.count, 50);
        assert_eq!(c.selection.cohort_rank, 1);
        assert_eq!(c.explainers.len(), 1);
        assert_eq!(c.evaluate.hits_k, vec![1, 2, 10]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("dataset = \"d\"\nbogus = 1").is_err());
        assert!(toml::from_str::<ExperimentConfig>("dataset = \"d\"\n[train]\ndim = 3").is_err());
    }

    #[test]
    fn seed_override_reaches_every_stage() {
        let mut c: ExperimentConfig = toml::from_str(
            "dataset = \"d\"\n[[explainers]]\nalgorithm = \"builder\"\n[[explainers]]\nalgorithm = \"criage\"",
        )
        .unwrap();
        c.apply_seed(99);
        assert_eq!(c.train.seed, 99);
        assert_eq!(c.selection.seed, 99);
        assert_eq!(c.explain.target_seed, 99);
        assert!(c.explainers.iter().all(|e| e.seed == 99));
    }
}
