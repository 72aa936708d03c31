use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elim::{min_fill_order, moral_graph, order_width};
use crate::inference::{exact_map, MapSolution};
use crate::netgen::{GenConfig, Instance};
use crate::network::{syntax_error, Assignment, BayesianNetwork, NetworkError, NetworkFile, VarId};
use crate::search::{run, Algorithm, MapProblem, SearchConfig, SearchError, SearchResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    File(#[from] NetworkError),
    #[error("invalid problem document: {0}")]
    Document(String),
    #[error("unknown variable `{0}`")]
    UnknownName(String),
    #[error("bad evidence item `{0}`, expected NAME=VALUE")]
    EvidenceSyntax(String),
    #[error("value {value} is out of range for `{name}` (cardinality {cardinality})")]
    ValueRange { name: String, value: usize, cardinality: usize },
    #[error("constrained width {width} exceeds the cap {cap}")]
    WidthCap { width: usize, cap: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
}

impl SolveError {
    /// Whether the error comes from the contents of an input file.
    pub fn is_input_error(&self) -> bool {
        matches!(self, SolveError::File(_) | SolveError::Document(_))
    }
}

/// A generated network with its query, as written by `gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenDocument {
    pub seed: u64,
    pub config: GenConfig,
    pub network: NetworkFile,
    pub map_vars: Vec<String>,
    /// Variable name to value index.
    pub evidence: BTreeMap<String, usize>,
}

impl GenDocument {
    pub fn new(seed: u64, config: GenConfig, instance: &Instance) -> Self {
        let name = |v: VarId| instance.network.variable(v).name.clone();
        GenDocument {
            seed,
            config,
            network: NetworkFile::from_network(&instance.network),
            map_vars: instance.map_vars.iter().map(|&v| name(v)).collect(),
            evidence: instance.evidence.iter().map(|(v, x)| (name(v), x)).collect(),
        }
    }
}

/// A network, optionally with the MAP variables and evidence it was generated with.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub network: BayesianNetwork,
    pub map_vars: Option<Vec<VarId>>,
    pub evidence: Option<Assignment>,
}

/// Reads either a plain network file or a [`GenDocument`].
pub fn read_problem(text: &str) -> Result<ProblemFile, SolveError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(syntax_error)?;
    if value.get("network").is_none() {
        let file: NetworkFile = serde_json::from_value(value).map_err(syntax_error)?;
        return Ok(ProblemFile { network: file.into_network()?, map_vars: None, evidence: None });
    }
    let doc: GenDocument = serde_json::from_str(text).map_err(syntax_error)?;
    let network = doc.network.into_network()?;
    let doc_err = |e: SolveError| SolveError::Document(e.to_string());
    let map_vars = doc.map_vars.iter().map(|n| lookup(&network, n)).collect::<Result<Vec<_>, _>>().map_err(doc_err)?;
    let mut evidence = Assignment::new();
    for (name, &value) in &doc.evidence {
        let v = lookup(&network, name).map_err(doc_err)?;
        check_value(&network, v, value).map_err(doc_err)?;
        evidence.bind(v, value);
    }
    Ok(ProblemFile { network, map_vars: Some(map_vars), evidence: Some(evidence) })
}

fn lookup(net: &BayesianNetwork, name: &str) -> Result<VarId, SolveError> {
    net.find(name).ok_or_else(|| SolveError::UnknownName(name.to_string()))
}

fn check_value(net: &BayesianNetwork, var: VarId, value: usize) -> Result<(), SolveError> {
    let cardinality = net.cardinality(var);
    if value >= cardinality {
        return Err(SolveError::ValueRange { name: net.variable(var).name.clone(), value, cardinality });
    }
    Ok(())
}

/// Comma-separated variable names.
pub fn parse_var_list(net: &BayesianNetwork, spec: &str) -> Result<Vec<VarId>, SolveError> {
    spec.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|n| lookup(net, n)).collect()
}

/// Comma-separated `NAME=VALUE` items, values given as indices.
pub fn parse_evidence(net: &BayesianNetwork, spec: &str) -> Result<Assignment, SolveError> {
    let mut out = Assignment::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item.split_once('=').ok_or_else(|| SolveError::EvidenceSyntax(item.to_string()))?;
        let var = lookup(net, name.trim())?;
        let value: usize = value.trim().parse().map_err(|_| SolveError::EvidenceSyntax(item.to_string()))?;
        check_value(net, var, value)?;
        out.bind(var, value);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveMode {
    Exact,
    Search(SearchConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub method: String,
    pub solution: MapSolution,
    pub search: Option<SearchResult>,
    pub constrained_width: Option<usize>,
}

impl SolveReport {
    pub fn render(&self, net: &BayesianNetwork) -> String {
        let mut out = String::new();
        let assignment: Vec<String> =
            self.solution.assignment.iter().map(|(v, x)| format!("{}={x}", net.variable(v).name)).collect();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "assignment: {}", assignment.join(","));
        let _ = writeln!(out, "score: {}", self.solution.prob);
        let _ = writeln!(out, "log_score: {}", self.solution.log_score());
        if let Some(w) = self.constrained_width {
            let _ = writeln!(out, "constrained_width: {w}");
        }
        if let Some(r) = &self.search {
            let _ = writeln!(out, "evaluations_used: {}", r.evaluations_used);
            let _ = writeln!(out, "evaluations_to_best: {}", r.evaluations_to_best);
            let _ = writeln!(out, "peaks_found: {}", r.peaks_found);
        }
        out
    }
}

/// One MAP query, exactly (subject to the width cap) or by local search.
pub fn solve(
    net: &BayesianNetwork,
    map_vars: &[VarId],
    evidence: &Assignment,
    mode: &SolveMode,
    width_cap: usize,
) -> Result<SolveReport, SolveError> {
    match mode {
        SolveMode::Exact => {
            let set: BTreeSet<VarId> = map_vars.iter().copied().collect();
            let g = moral_graph(net);
            let order = min_fill_order(&g, Some(&set));
            let width = order_width(&g, &order);
            if width > width_cap {
                return Err(SolveError::WidthCap { width, cap: width_cap });
            }
            let solution = exact_map(net, map_vars, evidence, &order).map_err(SearchError::from)?;
            Ok(SolveReport { method: "exact".into(), solution, search: None, constrained_width: Some(width) })
        }
        SolveMode::Search(config) => {
            let problem = MapProblem::new(net, map_vars, evidence)?;
            let result = run(&problem, config)?;
            let method = Algorithm { init: config.init, method: config.method }.to_string();
            Ok(SolveReport { method, solution: result.best.clone(), search: Some(result), constrained_width: None })
        }
    }
}
