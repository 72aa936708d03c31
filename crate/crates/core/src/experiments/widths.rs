use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{structure_columns, CsvRow, ExperimentError, Generator};
use crate::elim::{min_fill_order, moral_graph, order_width, width_stats, WidthStats};
use crate::netgen::{derive_seed, rng_from_seed, select_map_vars, GenConfig};

/// Regeneration attempts per instance before giving up on the root minimum.
const MAX_ATTEMPTS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct WidthConfig {
    pub instances: usize,
    pub nodes: usize,
    pub generator: Generator,
    /// Structures with fewer roots are regenerated.
    pub min_map_vars: usize,
    pub max_map_vars: usize,
    pub seed: u64,
}

impl Default for WidthConfig {
    fn default() -> Self {
        WidthConfig {
            instances: 100,
            nodes: 100,
            generator: Generator::Connectivity { c_values: (1..=20).collect() },
            min_map_vars: 10,
            max_map_vars: 25,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthRow {
    pub experiment: &'static str,
    pub seed: u64,
    pub generator: &'static str,
    pub nodes: usize,
    pub c: Option<usize>,
    pub p: Option<f64>,
    pub instance: usize,
    pub map_vars: usize,
    pub unconstrained_width: usize,
    pub constrained_width: usize,
}

impl CsvRow for WidthRow {
    const COLUMNS: &'static [&'static str] = &[
        "experiment",
        "seed",
        "generator",
        "nodes",
        "c",
        "p",
        "instance",
        "map_vars",
        "unconstrained_width",
        "constrained_width",
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthRecord {
    /// `c=<k>` per connectivity value, plus `all` for the pooled set.
    pub bucket: String,
    pub instances: usize,
    pub unconstrained: WidthStats,
    pub constrained: WidthStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthRun {
    pub rows: Vec<WidthRow>,
    pub records: Vec<WidthRecord>,
}

impl WidthRun {
    pub fn pooled(&self) -> &WidthRecord {
        self.records.last().expect("the pooled bucket is always present")
    }
}

fn width_row(config: &WidthConfig, instance: usize) -> Result<WidthRow, ExperimentError> {
    let structure = config.generator.structure_for(instance);
    let gen =
        GenConfig { structure: structure.clone(), nodes: config.nodes, bias: 0.5, max_map_vars: config.max_map_vars };
    let base = derive_seed(config.seed, instance as u64);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_from_seed(derive_seed(base, attempt));
        let dag = gen.structure(&mut rng)?;
        if dag.roots().len() < config.min_map_vars {
            continue;
        }
        let skeleton = dag.skeleton();
        let map_vars: BTreeSet<_> = select_map_vars(&skeleton, config.max_map_vars, &mut rng).into_iter().collect();
        let g = moral_graph(&skeleton);
        let (c, p) = structure_columns(&structure);
        return Ok(WidthRow {
            experiment: "widths",
            seed: config.seed,
            generator: config.generator.name(),
            nodes: config.nodes,
            c,
            p,
            instance,
            map_vars: map_vars.len(),
            unconstrained_width: order_width(&g, &min_fill_order(&g, None)),
            constrained_width: order_width(&g, &min_fill_order(&g, Some(&map_vars))),
        });
    }
    Err(ExperimentError::Config(format!(
        "instance {instance}: no structure with at least {} roots in {MAX_ATTEMPTS} attempts",
        config.min_map_vars
    )))
}

fn record(bucket: String, rows: &[&WidthRow]) -> WidthRecord {
    let unc: Vec<usize> = rows.iter().map(|r| r.unconstrained_width).collect();
    let con: Vec<usize> = rows.iter().map(|r| r.constrained_width).collect();
    WidthRecord {
        bucket,
        instances: rows.len(),
        unconstrained: width_stats(&unc).expect("non-empty bucket"),
        constrained: width_stats(&con).expect("non-empty bucket"),
    }
}

/// Min-fill widths with and without the MAP constraint, per instance and
/// aggregated per connectivity bucket and overall.
pub fn run_width_experiment(config: &WidthConfig) -> Result<WidthRun, ExperimentError> {
    if config.instances == 0 {
        return Err(ExperimentError::Config("at least one instance is required".into()));
    }
    if config.min_map_vars > config.max_map_vars {
        return Err(ExperimentError::Config("minimum MAP variables exceeds the maximum".into()));
    }
    config.generator.validate()?;
    let rows = (0..config.instances).into_par_iter().map(|i| width_row(config, i)).collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    if matches!(config.generator, Generator::Connectivity { .. }) {
        let mut by_c: BTreeMap<usize, Vec<&WidthRow>> = BTreeMap::new();
        for row in &rows {
            by_c.entry(row.c.expect("connectivity rows carry c")).or_default().push(row);
        }
        records.extend(by_c.into_iter().map(|(c, rs)| record(format!("c={c}"), &rs)));
    }
    records.push(record("all".into(), &rows.iter().collect::<Vec<_>>()));
    Ok(WidthRun { rows, records })
}
