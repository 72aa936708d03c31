use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{mean_stdev, structure_columns, CsvRow, ExperimentError, Generator, SOLVED_TOLERANCE};
use crate::elim::{min_fill_order, moral_graph, order_width};
use crate::inference::exact_map;
use crate::netgen::{derive_seed, quantify, rng_from_seed, sample_evidence, select_map_vars, GenConfig};
use crate::search::{run, Algorithm, MapProblem, SearchConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct QualityConfig {
    pub instances: usize,
    pub nodes: usize,
    pub generator: Generator,
    pub biases: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub budget: usize,
    /// Structures whose constrained min-fill width exceeds this are skipped.
    pub width_cap: usize,
    pub max_map_vars: usize,
    pub restart_walk_length: usize,
    pub seed: u64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            instances: 100,
            nodes: 100,
            generator: Generator::EdgeProb { p: 0.025 },
            biases: vec![0.0, 0.125, 0.25, 0.375, 0.5],
            algorithms: Algorithm::ALL.to_vec(),
            budget: 150,
            width_cap: 22,
            max_map_vars: 25,
            restart_walk_length: 3,
            seed: 0,
        }
    }
}

impl QualityConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: String| Err(ExperimentError::Config(m));
        if self.instances == 0 {
            return fail("at least one instance is required".into());
        }
        if self.nodes == 0 {
            return fail("networks need at least one variable".into());
        }
        if self.biases.is_empty() || self.algorithms.is_empty() {
            return fail("the bias grid and the method list must be non-empty".into());
        }
        if let Some(b) = self.biases.iter().find(|b| !(0.0..=0.5).contains(*b)) {
            return fail(format!("bias {b} is outside [0, 0.5]"));
        }
        if self.restart_walk_length == 0 {
            return fail("restart walk length must be at least 1".into());
        }
        for a in &self.algorithms {
            let cost = a.init.cost(self.max_map_vars);
            if cost > self.budget {
                return fail(format!("{a} needs up to {cost} evaluations to initialize; budget is {}", self.budget));
            }
        }
        self.generator.validate()
    }
}

/// One (instance, bias, method) outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityRow {
    pub experiment: &'static str,
    pub seed: u64,
    pub generator: &'static str,
    pub nodes: usize,
    pub c: Option<usize>,
    pub p: Option<f64>,
    pub bias: f64,
    pub method: String,
    pub instance: usize,
    pub exact_log_score: f64,
    pub approx_log_score: f64,
    pub solved: bool,
    pub evaluations_used: usize,
    pub evaluations_to_best: usize,
    pub peaks_found: usize,
    pub map_vars: usize,
    pub first_peak_evals: Option<usize>,
}

impl CsvRow for QualityRow {
    const COLUMNS: &'static [&'static str] = &[
        "experiment",
        "seed",
        "generator",
        "nodes",
        "c",
        "p",
        "bias",
        "method",
        "instance",
        "exact_log_score",
        "approx_log_score",
        "solved",
        "evaluations_used",
        "evaluations_to_best",
        "peaks_found",
        "map_vars",
        "first_peak_evals",
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityRun {
    pub rows: Vec<QualityRow>,
    /// Instances skipped by the width cap.
    pub skipped: Vec<usize>,
    pub requested: usize,
}

impl QualityRun {
    pub fn reported(&self) -> usize {
        self.requested - self.skipped.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityRecord {
    pub method: String,
    pub bias: f64,
    pub instances: usize,
    pub solved: usize,
}

impl QualityRecord {
    pub fn fraction(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.solved as f64 / self.instances as f64
        }
    }
}

impl CsvRow for QualityRecord {
    const COLUMNS: &'static [&'static str] = &["method", "bias", "instances", "solved"];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalStatsRecord {
    pub method: String,
    pub instances: usize,
    pub mean: f64,
    pub stdev: f64,
    pub max: usize,
}

impl CsvRow for EvalStatsRecord {
    const COLUMNS: &'static [&'static str] = &["method", "instances", "mean", "stdev", "max"];
}

enum Outcome {
    Skipped(usize),
    Rows(Vec<QualityRow>),
}

fn run_instance(config: &QualityConfig, instance: usize) -> Result<Outcome, ExperimentError> {
    let structure = config.generator.structure_for(instance);
    let gen =
        GenConfig { structure: structure.clone(), nodes: config.nodes, bias: 0.5, max_map_vars: config.max_map_vars };
    let base = derive_seed(config.seed, instance as u64);
    let mut rng = rng_from_seed(base);
    let dag = gen.structure(&mut rng)?;
    let skeleton = dag.skeleton();
    let map_vars = select_map_vars(&skeleton, config.max_map_vars, &mut rng);
    let map_set: BTreeSet<_> = map_vars.iter().copied().collect();
    let g = moral_graph(&skeleton);
    let constrained = min_fill_order(&g, Some(&map_set));
    if order_width(&g, &constrained) > config.width_cap {
        return Ok(Outcome::Skipped(instance));
    }
    let unconstrained = min_fill_order(&g, None);
    let (c, p) = structure_columns(&structure);

    let mut rows = Vec::with_capacity(config.biases.len() * config.algorithms.len());
    for &bias in &config.biases {
        let bias_seed = derive_seed(base, bias.to_bits());
        let mut rng = rng_from_seed(bias_seed);
        let net = quantify(&dag, bias, &mut rng);
        let mut evidence = sample_evidence(&net, &mut rng);
        for &v in &map_vars {
            evidence.unbind(v);
        }
        let exact = exact_map(&net, &map_vars, &evidence, &constrained).map_err(crate::search::SearchError::from)?;
        let problem = MapProblem::with_order(&net, &map_vars, &evidence, unconstrained.clone())?;
        for &algorithm in &config.algorithms {
            let slot = Algorithm::ALL.iter().position(|a| *a == algorithm).unwrap_or(Algorithm::ALL.len());
            let search = SearchConfig {
                restart_walk_length: config.restart_walk_length,
                ..algorithm.config(config.budget, derive_seed(bias_seed, 1 + slot as u64))
            };
            let result = run(&problem, &search)?;
            rows.push(QualityRow {
                experiment: "quality",
                seed: config.seed,
                generator: config.generator.name(),
                nodes: config.nodes,
                c,
                p,
                bias,
                method: algorithm.to_string(),
                instance,
                exact_log_score: exact.log_score(),
                approx_log_score: result.best.log_score(),
                solved: result.best.prob.rel_eq(exact.prob, SOLVED_TOLERANCE),
                evaluations_used: result.evaluations_used,
                evaluations_to_best: result.evaluations_to_best,
                peaks_found: result.peaks_found,
                map_vars: map_vars.len(),
                first_peak_evals: result.first_peak_evaluation,
            });
        }
    }
    Ok(Outcome::Rows(rows))
}

/// Exact MAP against every configured method on every instance and bias.
pub fn run_quality_experiment(config: &QualityConfig) -> Result<QualityRun, ExperimentError> {
    config.validate()?;
    let outcomes =
        (0..config.instances).into_par_iter().map(|i| run_instance(config, i)).collect::<Result<Vec<_>, _>>()?;
    let mut run = QualityRun { rows: Vec::new(), skipped: Vec::new(), requested: config.instances };
    for outcome in outcomes {
        match outcome {
            Outcome::Skipped(i) => run.skipped.push(i),
            Outcome::Rows(rows) => run.rows.extend(rows),
        }
    }
    Ok(run)
}

fn first_appearance<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// Solved counts per (method, bias), methods and biases in first-seen order.
pub fn quality_records(rows: &[QualityRow]) -> Vec<QualityRecord> {
    let methods = first_appearance(rows.iter().map(|r| r.method.clone()));
    let biases = first_appearance(rows.iter().map(|r| r.bias));
    let mut out = Vec::new();
    for method in &methods {
        for &bias in &biases {
            let group: Vec<&QualityRow> = rows.iter().filter(|r| &r.method == method && r.bias == bias).collect();
            out.push(QualityRecord {
                method: method.clone(),
                bias,
                instances: group.len(),
                solved: group.iter().filter(|r| r.solved).count(),
            });
        }
    }
    out
}

/// Mean, population standard deviation and maximum of `evaluations_to_best`
/// per method at one bias.
pub fn eval_stats(rows: &[QualityRow], bias: f64) -> Vec<EvalStatsRecord> {
    let rows: Vec<&QualityRow> = rows.iter().filter(|r| r.bias == bias).collect();
    first_appearance(rows.iter().map(|r| r.method.clone()))
        .into_iter()
        .map(|method| {
            let evals: Vec<usize> = rows.iter().filter(|r| r.method == method).map(|r| r.evaluations_to_best).collect();
            let (mean, stdev) = mean_stdev(&evals.iter().map(|&e| e as f64).collect::<Vec<_>>());
            EvalStatsRecord {
                method,
                instances: evals.len(),
                mean,
                stdev,
                max: evals.iter().copied().max().unwrap_or(0),
            }
        })
        .collect()
}

/// The quality grid at a single bias, summarized by [`eval_stats`].
pub fn run_eval_stats(
    config: &QualityConfig,
    bias: f64,
) -> Result<(QualityRun, Vec<EvalStatsRecord>), ExperimentError> {
    let run = run_quality_experiment(&QualityConfig { biases: vec![bias], ..config.clone() })?;
    let stats = eval_stats(&run.rows, bias);
    Ok((run, stats))
}
