//! Experiment drivers: width survey, solution quality, evaluation statistics,
//! and one-shot solving. Every run is a pure function of its config and master
//! seed; instances run in parallel and rows come back in instance order.

mod quality;
mod solve;
mod widths;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::netgen::{max_connectivity, GenError, StructureMethod};
use crate::search::SearchError;

pub use quality::{
    eval_stats, quality_records, run_eval_stats, run_quality_experiment, EvalStatsRecord, QualityConfig, QualityRecord,
    QualityRow, QualityRun,
};
pub use solve::{
    parse_evidence, parse_var_list, read_problem, solve, GenDocument, ProblemFile, SolveError, SolveMode, SolveReport,
};
pub use widths::{run_width_experiment, WidthConfig, WidthRecord, WidthRow, WidthRun};

/// Instance count used by `--full-scale`.
pub const FULL_SCALE_INSTANCES: usize = 1000;

/// Relative tolerance for counting an approximate answer as correct.
pub const SOLVED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Structure generator for a batch of instances.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// Instance `i` uses connectivity `c_values[i % len]`.
    Connectivity {
        c_values: Vec<usize>,
    },
    EdgeProb {
        p: f64,
    },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Connectivity { .. } => "connectivity",
            Generator::EdgeProb { .. } => "edge_prob",
        }
    }

    pub fn structure_for(&self, instance: usize) -> StructureMethod {
        match self {
            Generator::Connectivity { c_values } => {
                StructureMethod::Connectivity { c: c_values[instance % c_values.len()] }
            }
            Generator::EdgeProb { p } => StructureMethod::EdgeProb { p: *p },
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        match self {
            Generator::Connectivity { c_values } => {
                if c_values.is_empty() {
                    return Err(ExperimentError::Config("no connectivity values given".into()));
                }
                match c_values.iter().find(|&&c| c == 0 || c > max_connectivity()) {
                    Some(&c) => Err(GenError::Connectivity { c, max: max_connectivity() }.into()),
                    None => Ok(()),
                }
            }
            Generator::EdgeProb { p } if !(0.0..=1.0).contains(p) => Err(GenError::EdgeProbability(*p).into()),
            Generator::EdgeProb { .. } => Ok(()),
        }
    }
}

/// `(c, p)` columns for a structure method.
pub(crate) fn structure_columns(method: &StructureMethod) -> (Option<usize>, Option<f64>) {
    match *method {
        StructureMethod::Connectivity { c } => (Some(c), None),
        StructureMethod::EdgeProb { p } => (None, Some(p)),
    }
}

/// A CSV record type with a fixed column list, so empty outputs still carry a header.
pub trait CsvRow: Serialize {
    const COLUMNS: &'static [&'static str];
}

/// Writes one header line, then one line per row.
pub fn write_csv<T: CsvRow>(rows: &[T], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Population mean and standard deviation.
pub(crate) fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
