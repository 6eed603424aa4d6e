use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use kgexplain_core::explain::{
    build_target_set, calibrate_ensemble, sample_latent_candidates, Evaluator, EvaluatorKind,
    LatentCandidate, Mode, Polarity,
};
use kgexplain_core::explainers::{
    criage_first_order, data_poisoning_direct, exhaustive_length1, exhaustive_over,
    variable_length_builder, Algorithm, ExplainerConfig, ExplanationRun, Objective,
};
use kgexplain_core::kge::{self, Checkpoint, EmbeddingModel};
use kgexplain_core::metrics::{self, ComparisonEntry, RankRow, RankTable};
use kgexplain_core::space::{Preset, SearchSpace};
use kgexplain_core::synthetic::{self, SyntheticConfig};
use kgexplain_core::{KnowledgeGraph, Triple};

use crate::config::{ExperimentConfig, Loaded};
use crate::failure::{invalid, runtime, CmdResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub const CHECKPOINT_FILE: &str = "model.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const CONFIG_ECHO: &str = "config.toml";

fn io_err(path: &Path, e: impl std::fmt::Display) -> crate::failure::Failure {
    runtime(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> CmdResult<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Writes through a temporary file so a killed process never leaves a
/// truncated output behind.
fn write_atomic(path: &Path, contents: &str) -> CmdResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    write_atomic(path, &(text + "\n"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("malformed {}: {e}", path.display())))
}

fn echo_config(loaded: &Loaded) -> CmdResult<()> {
    let out = &loaded.config.output;
    create_dir(out)?;
    write_atomic(&out.join(CONFIG_ECHO), &loaded.text)
}

fn load_graph(config: &ExperimentConfig) -> CmdResult<KnowledgeGraph> {
    Ok(KnowledgeGraph::load(&config.dataset)?)
}

fn load_checkpoint(
    kg: &KnowledgeGraph,
    config: &ExperimentConfig,
    path: Option<&Path>,
) -> CmdResult<Checkpoint> {
    let path = path.map_or_else(|| config.output.join(CHECKPOINT_FILE), Path::to_path_buf);
    if !path.is_file() {
        return Err(invalid(format!(
            "checkpoint {} does not exist; run `train` first",
            path.display()
        )));
    }
    Ok(Checkpoint::load(&path, kg)?)
}

pub fn train(loaded: &Loaded) -> CmdResult<()> {
    let config = &loaded.config;
    let kg = load_graph(config)?;
    echo_config(loaded)?;
    let (model, history) = kge::fit(&kg, &config.train)?;
    let ckpt = config.output.join(CHECKPOINT_FILE);
    Checkpoint::new(&kg, &config.train, &model).save(&ckpt)?;
    let mut csv = String::from("epoch,train_nll,valid_nll\n");
    for e in &history.epochs {
        let valid = e.valid_nll.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", e.epoch, e.train_nll, valid));
    }
    write_atomic(&config.output.join(LOSS_FILE), &csv)?;
    log::info!("checkpoint written to {}", ckpt.display());
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub kg_fingerprint: String,
    pub cohort_rank: usize,
    pub seed: u64,
    pub requested: usize,
    pub triples: Vec<SelectedTriple>,
}

impl Selection {
    fn load(path: &Path, kg: &KnowledgeGraph) -> CmdResult<(Self, Vec<(Triple, usize)>)> {
        if !path.is_file() {
            return Err(invalid(format!(
                "selection {} does not exist; run `select` first",
                path.display()
            )));
        }
        let sel: Selection = read_json(path)?;
        if sel.kg_fingerprint != kg.fingerprint() {
            return Err(invalid(format!(
                "selection {} was made for a different dataset",
                path.display()
            )));
        }
        let triples = sel
            .triples
            .iter()
            .map(|s| {
                kg.resolve(&s.subject, &s.relation, &s.object)
                    .map(|t| (t, s.rank))
                    .ok_or_else(|| {
                        invalid(format!(
                            "unknown triple {} {} {}",
                            s.subject, s.relation, s.object
                        ))
                    })
            })
            .collect::<CmdResult<Vec<_>>>()?;
        Ok((sel, triples))
    }
}

fn selection_path(config: &ExperimentConfig, path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| config.output.join(SELECTION_FILE), Path::to_path_buf)
}

pub fn select(loaded: &Loaded, checkpoint: Option<&Path>) -> CmdResult<()> {
    let config = &loaded.config;
    let kg = load_graph(config)?;
    let ckpt = load_checkpoint(&kg, config, checkpoint)?;
    echo_config(loaded)?;
    let wanted = config.selection.cohort_rank;
    let mut pool = Vec::new();
    for t in kg.evaluable_test() {
        let rank = ckpt.model.object_rank(&kg, &t)?;
        if wanted == 0 || rank == wanted {
            pool.push((t, rank));
        }
    }
    if pool.len() < config.selection.count {
        log::warn!(
            "cohort holds {} test triples, fewer than the {} requested; selecting all",
            pool.len(),
            config.selection.count
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.selection.seed);
    pool.shuffle(&mut rng);
    pool.truncate(config.selection.count);
    let selection = Selection {
        kg_fingerprint: kg.fingerprint(),
        cohort_rank: wanted,
        seed: config.selection.seed,
        requested: config.selection.count,
        triples: pool
            .iter()
            .map(|(t, rank)| {
                let (subject, relation, object) = kg.labels_of(t);
                SelectedTriple {
                    subject,
                    relation,
                    object,
                    rank: *rank,
                }
            })
            .collect(),
    };
    let path = config.output.join(SELECTION_FILE);
    write_json(&path, &selection)?;
    log::info!(
        "{} triples selected into {}",
        selection.triples.len(),
        path.display()
    );
    Ok(())
}

pub fn run_path(dir: &Path, index: usize, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{index:04}_{algorithm}.json"))
}

fn runs_dir(config: &ExperimentConfig) -> PathBuf {
    config.output.join("runs")
}

fn simultaneous_dir(config: &ExperimentConfig) -> PathBuf {
    config.output.join("simultaneous")
}

/// Ranks after removing every pooled explanation at once and retraining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousRemoval {
    pub algorithm: Algorithm,
    pub removed: Vec<Triple>,
    pub rows: Vec<RankRow>,
    pub missing_runs: Vec<usize>,
}

struct LatentPool {
    candidates: Vec<LatentCandidate>,
}

fn objective_for(
    config: &ExperimentConfig,
    kg: &KnowledgeGraph,
    model: &EmbeddingModel,
    prediction: &Triple,
) -> kgexplain_core::Result<Objective> {
    let s = &config.explain;
    Ok(match s.mode {
        Mode::Necessary => Objective::Necessary,
        Mode::Sufficient => Objective::Sufficient,
        Mode::CSufficient => Objective::CSufficient {
            targets: build_target_set(kg, model, prediction, s.target_size, s.target_seed)?,
        },
        Mode::LatentPositive => Objective::Latent {
            polarity: Polarity::Positive,
        },
        Mode::LatentNegative => Objective::Latent {
            polarity: Polarity::Negative,
        },
    })
}

fn run_one(
    ev: &Evaluator<'_>,
    prediction: &Triple,
    objective: &Objective,
    explainer: &ExplainerConfig,
    latent: Option<&LatentPool>,
) -> kgexplain_core::Result<ExplanationRun> {
    match explainer.algorithm {
        Algorithm::ExhaustiveLength1 => match latent {
            Some(pool) => {
                let near: Vec<Triple> = pool
                    .candidates
                    .iter()
                    .map(|c| c.triple)
                    .filter(|t| {
                        t.contains_entity(prediction.subject)
                            || t.contains_entity(prediction.object)
                    })
                    .collect();
                exhaustive_over(
                    ev,
                    prediction,
                    &near,
                    Preset::Unobserved,
                    objective,
                    explainer,
                )
            }
            None => {
                let space = SearchSpace::build(ev.kg(), explainer.space, Some(prediction))?;
                exhaustive_length1(ev, prediction, &space, objective, explainer)
            }
        },
        Algorithm::DataPoisoning => data_poisoning_direct(ev, prediction, objective, explainer),
        Algorithm::Criage => criage_first_order(ev, prediction, objective, explainer),
        Algorithm::Builder => variable_length_builder(ev, prediction, objective, explainer),
    }
}

pub fn explain(
    loaded: &Loaded,
    checkpoint: Option<&Path>,
    selection: Option<&Path>,
) -> CmdResult<()> {
    let config = &loaded.config;
    let kg = load_graph(config)?;
    let ckpt = load_checkpoint(&kg, config, checkpoint)?;
    let (_, selected) = Selection::load(&selection_path(config, selection), &kg)?;
    echo_config(loaded)?;
    let model = &ckpt.model;
    let dir = runs_dir(config);
    create_dir(&dir)?;

    let latent = if matches!(
        config.explain.mode,
        Mode::LatentPositive | Mode::LatentNegative
    ) {
        let heldout = kg.evaluable_valid();
        let ensemble = calibrate_ensemble(model, &kg, &heldout, config.explain.calibration_seed)?;
        let candidates = sample_latent_candidates(
            &ensemble,
            &kg,
            config.explain.latent_epsilon,
            config.explain.latent_budget,
        )?;
        log::info!("{} latent candidates sampled", candidates.len());
        Some(LatentPool { candidates })
    } else {
        None
    };

    let failures = Mutex::new(Vec::new());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.explain.workers)
        .build()
        .map_err(|e| runtime(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        selected
            .par_iter()
            .enumerate()
            .for_each(|(index, (prediction, _))| {
                let pending: Vec<&ExplainerConfig> = config
                    .explainers
                    .iter()
                    .filter(|e| !run_path(&dir, index, e.algorithm).exists())
                    .collect();
                if pending.is_empty() {
                    log::info!("triple {index}: all runs present, skipping");
                    return;
                }
                let fail = |alg: String, msg: String| {
                    log::error!("triple {index} ({alg}): {msg}");
                    failures
                        .lock()
                        .unwrap()
                        .push(format!("triple {index} ({alg}): {msg}"));
                };
                let objective = match objective_for(config, &kg, model, prediction) {
                    Ok(o) => o,
                    Err(e) => return fail("all".into(), e.to_string()),
                };
                let mut evaluators: HashMap<EvaluatorKind, Evaluator<'_>> = HashMap::new();
                for explainer in pending {
                    let ev = evaluators.entry(explainer.evaluator).or_insert_with(|| {
                        Evaluator::new(&kg, model, config.effectiveness(explainer))
                    });
                    match run_one(ev, prediction, &objective, explainer, latent.as_ref()) {
                        Ok(run) => {
                            if let Err(e) =
                                write_json(&run_path(&dir, index, explainer.algorithm), &run)
                            {
                                fail(explainer.algorithm.to_string(), e.to_string());
                            } else {
                                log::info!(
                                    "triple {index} ({}): {} candidates, {} retrains",
                                    explainer.algorithm,
                                    run.evaluations,
                                    run.retrains
                                );
                            }
                        }
                        Err(e) => fail(explainer.algorithm.to_string(), e.to_string()),
                    }
                }
            });
    });

    if config.explain.simultaneous_removal {
        simultaneous_removal(config, &kg, &selected)?;
    }
    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!(
            "{} explanation runs failed:\n  {}",
            failures.len(),
            failures.join("\n  ")
        )))
    }
}

fn simultaneous_removal(
    config: &ExperimentConfig,
    kg: &KnowledgeGraph,
    selected: &[(Triple, usize)],
) -> CmdResult<()> {
    let dir = simultaneous_dir(config);
    create_dir(&dir)?;
    for explainer in &config.explainers {
        let alg = explainer.algorithm;
        let out = dir.join(format!("{alg}.json"));
        if out.exists() {
            log::info!("simultaneous removal for {alg} already present, skipping");
            continue;
        }
        let mut removed = BTreeSet::new();
        let mut missing_runs = Vec::new();
        for index in 0..selected.len() {
            let path = run_path(&runs_dir(config), index, alg);
            if !path.exists() {
                missing_runs.push(index);
                continue;
            }
            let run: ExplanationRun = read_json(&path)?;
            if let Some(best) = run.best_candidate() {
                removed.extend(best.explanation.triples().iter().copied());
            }
        }
        let removed: Vec<Triple> = removed.into_iter().collect();
        let model = kge::retrain_from_scratch(kg, &kg.train_without(&removed), &config.train)?;
        Checkpoint::new(kg, &config.train, &model).save(dir.join(format!("{alg}_model.json")))?;
        let rows = selected
            .iter()
            .map(|&(t, rank)| {
                Ok(RankRow {
                    triple: t,
                    rank_before: rank,
                    rank_after: model.object_rank(kg, &t)?,
                })
            })
            .collect::<kgexplain_core::Result<Vec<_>>>()?;
        write_json(
            &out,
            &SimultaneousRemoval {
                algorithm: alg,
                removed,
                rows,
                missing_runs,
            },
        )?;
        log::info!(
            "simultaneous removal for {alg} written to {}",
            out.display()
        );
    }
    Ok(())
}

fn load_runs(
    config: &ExperimentConfig,
    count: usize,
    algorithm: Algorithm,
    gaps: &mut Vec<String>,
) -> CmdResult<Vec<Option<ExplanationRun>>> {
    (0..count)
        .map(|index| {
            let path = run_path(&runs_dir(config), index, algorithm);
            if path.exists() {
                read_json(&path).map(Some)
            } else {
                gaps.push(path.display().to_string());
                Ok(None)
            }
        })
        .collect()
}

pub fn evaluate(loaded: &Loaded, selection: Option<&Path>, format: Format) -> CmdResult<()> {
    let config = &loaded.config;
    if config.explain.mode == Mode::CSufficient {
        return Err(invalid(
            "rank tables need prediction ranks; c-sufficient runs report target ranks (use `pareto` instead)",
        ));
    }
    let kg = load_graph(config)?;
    let (_, selected) = Selection::load(&selection_path(config, selection), &kg)?;
    let mut gaps = Vec::new();
    let mut per_algorithm = Vec::new();
    for explainer in &config.explainers {
        let runs = load_runs(config, selected.len(), explainer.algorithm, &mut gaps)?;
        let simultaneous = simultaneous_dir(config).join(format!("{}.json", explainer.algorithm));
        let removal = if config.explain.simultaneous_removal {
            if simultaneous.exists() {
                Some(read_json::<SimultaneousRemoval>(&simultaneous)?)
            } else {
                gaps.push(simultaneous.display().to_string());
                None
            }
        } else {
            None
        };
        per_algorithm.push((explainer.algorithm, runs, removal));
    }
    if !gaps.is_empty() {
        return Err(invalid(format!(
            "missing run files:\n  {}",
            gaps.join("\n  ")
        )));
    }
    echo_config(loaded)?;
    let reports_dir = config.output.join("reports");
    let mut entries = Vec::new();
    for (algorithm, runs, removal) in per_algorithm {
        let runs: Vec<ExplanationRun> = runs.into_iter().flatten().collect();
        let rows = match removal {
            Some(r) => r.rows,
            None => selected
                .iter()
                .zip(&runs)
                .map(|(&(t, rank), run)| RankRow {
                    triple: t,
                    rank_before: rank,
                    rank_after: run
                        .best_candidate()
                        .map_or(rank, |c| c.result.rank_after.round() as usize),
                })
                .collect(),
        };
        let mut table = RankTable::new(rows)?;
        if config.selection.cohort_rank > 0 {
            table = metrics::cohort_filter(&table, config.selection.cohort_rank);
        }
        let label = algorithm.to_string();
        let (report, paths) = metrics::emit_report(
            &kg,
            &label,
            &table,
            &runs,
            &config.evaluate.hits_k,
            &reports_dir,
        )?;
        log::info!("report for {label} written to {}", paths.report.display());
        entries.push(ComparisonEntry::from_report(&report));
    }
    let rows = metrics::comparison_table(&entries);
    match format {
        Format::Json => write_json(&config.output.join("comparison.json"), &rows)?,
        Format::Csv => metrics::write_comparison_csv(&rows, &config.output.join("comparison.csv"))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct FrontExport<'a> {
    subject: String,
    relation: String,
    object: String,
    algorithm: Algorithm,
    front: &'a kgexplain_core::explain::ParetoFront,
}

pub fn pareto(loaded: &Loaded, format: Format) -> CmdResult<()> {
    let config = &loaded.config;
    let kg = load_graph(config)?;
    let dir = runs_dir(config);
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(_) => {
            return Err(invalid(format!(
                "no runs directory at {}; run `explain` first",
                dir.display()
            )))
        }
    };
    files.sort();
    let runs = files
        .iter()
        .map(|p| read_json(p))
        .collect::<CmdResult<Vec<ExplanationRun>>>()?;
    match format {
        Format::Csv => metrics::write_pareto_csv(&kg, &runs, &config.output.join("pareto.csv"))?,
        Format::Json => {
            let export: Vec<FrontExport<'_>> = runs
                .iter()
                .map(|r| {
                    let (subject, relation, object) = kg.labels_of(&r.prediction);
                    FrontExport {
                        subject,
                        relation,
                        object,
                        algorithm: r.algorithm,
                        front: &r.front,
                    }
                })
                .collect();
            write_json(&config.output.join("pareto.json"), &export)?;
        }
    }
    Ok(())
}

pub fn generate(out: &Path, cfg: &SyntheticConfig) -> CmdResult<()> {
    if cfg.num_entities == 0 || cfg.num_clusters == 0 || cfg.num_clusters > cfg.num_entities {
        return Err(invalid("need at least one entity per cluster"));
    }
    synthetic::write_dataset(cfg, out)?;
    log::info!("synthetic dataset written to {}", out.display());
    Ok(())
}
