//! Local search for MAP: hill climbing with random restarts and taboo search
//! over complete instantiations of the MAP variables.
//!
//! One *evaluation* is one pass over the recorded trace. A search step scores
//! the current state and all of its neighbors in a single evaluation;
//! initializations cost 0 (random), 1 (MPE, ML) or `|S|` (sequential).

mod init;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::elim::{min_fill_order, moral_graph, EliminationOrder};
use crate::inference::{InferenceError, MapSolution};
use crate::netgen::rng_from_seed;
use crate::network::{Assignment, AssignmentError, BayesianNetwork, VarId};
use crate::prob::ScaledProb;
use crate::trace::{neighbor_scores_for, IndicatorSetting, Trace, TraceBuffers};

pub use init::{init_ml, init_mpe, init_random, init_seq};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("initialization needs {cost} evaluations but the budget is {budget}")]
    BudgetTooSmall { cost: usize, budget: usize },
    #[error("restart walk length must be at least 1")]
    WalkLength,
}

impl From<AssignmentError> for SearchError {
    fn from(e: AssignmentError) -> Self {
        SearchError::Inference(e.into())
    }
}

/// A MAP query with its trace, built once and shared by every search run.
#[derive(Clone, Debug)]
pub struct MapProblem<'a> {
    net: &'a BayesianNetwork,
    map_vars: Vec<VarId>,
    evidence: Assignment,
    order: EliminationOrder,
    trace: Trace,
}

impl<'a> MapProblem<'a> {
    /// Uses an unconstrained min-fill order of the moral graph.
    pub fn new(net: &'a BayesianNetwork, map_vars: &[VarId], evidence: &Assignment) -> Result<Self, SearchError> {
        let order = min_fill_order(&moral_graph(net), None);
        Self::with_order(net, map_vars, evidence, order)
    }

    pub fn with_order(
        net: &'a BayesianNetwork,
        map_vars: &[VarId],
        evidence: &Assignment,
        order: EliminationOrder,
    ) -> Result<Self, SearchError> {
        evidence.validate(net)?;
        if order.len() != net.num_vars() {
            return Err(InferenceError::OrderLength { expected: net.num_vars(), found: order.len() }.into());
        }
        let set: BTreeSet<VarId> = map_vars.iter().copied().collect();
        if let Some(&v) = set.iter().find(|&&v| v >= net.num_vars()) {
            return Err(AssignmentError::UnknownVariable(v).into());
        }
        if let Some(&v) = set.iter().find(|&&v| evidence.contains(v)) {
            return Err(InferenceError::MapEvidenceOverlap(v).into());
        }
        let trace = Trace::build(net, &order);
        if trace.evaluate(&IndicatorSetting::from_assignment(net, evidence)).is_zero() {
            return Err(InferenceError::ZeroProbabilityEvidence.into());
        }
        Ok(MapProblem { net, map_vars: set.into_iter().collect(), evidence: evidence.clone(), order, trace })
    }

    pub fn network(&self) -> &'a BayesianNetwork {
        self.net
    }

    /// Sorted MAP variables.
    pub fn map_vars(&self) -> &[VarId] {
        &self.map_vars
    }

    pub fn evidence(&self) -> &Assignment {
        &self.evidence
    }

    pub fn order(&self) -> &EliminationOrder {
        &self.order
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// `Pr(s, e)` for a state over the MAP variables, outside any budget.
    pub fn score(&self, state: &Assignment) -> Result<ScaledProb, SearchError> {
        state.validate(self.net)?;
        Ok(self.trace.evaluate(&self.setting(state)))
    }

    fn setting(&self, state: &Assignment) -> IndicatorSetting {
        let mut setting = IndicatorSetting::from_assignment(self.net, &self.evidence);
        for (v, x) in state.iter() {
            setting.bind(v, x);
        }
        setting
    }

    fn values_of(&self, state: &Assignment) -> Vec<usize> {
        self.map_vars.iter().map(|&v| state.get(v).expect("state binds every MAP variable")).collect()
    }

    fn assignment_of(&self, values: &[usize]) -> Assignment {
        self.map_vars.iter().copied().zip(values.iter().copied()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Init {
    Rand,
    Ml,
    Mpe,
    Seq,
}

impl Init {
    /// Evaluations charged for initializing `m` MAP variables.
    pub fn cost(self, m: usize) -> usize {
        match self {
            Init::Rand => 0,
            Init::Ml | Init::Mpe => 1,
            Init::Seq => m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Init::Rand => "Rand",
            Init::Ml => "ML",
            Init::Mpe => "MPE",
            Init::Seq => "Seq",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Return the initialization without searching.
    InitOnly,
    Hill,
    Taboo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub method: Method,
    pub init: Init,
    pub budget: usize,
    pub restart_walk_length: usize,
    pub rng_seed: u64,
    pub record_best_trace: bool,
    /// Keep every move and walk step in [`SearchResult::path`].
    pub record_path: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            method: Method::Taboo,
            init: Init::Seq,
            budget: 150,
            restart_walk_length: 3,
            rng_seed: 0,
            record_best_trace: false,
            record_path: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: MapSolution,
    pub evaluations_used: usize,
    /// Evaluation index at which `best` was first scored, counting initialization.
    pub evaluations_to_best: usize,
    pub peaks_found: usize,
    pub first_peak_evaluation: Option<usize>,
    /// `(evaluation index, score)` at every improvement of the best state.
    pub visited_best_trace: Option<Vec<(usize, ScaledProb)>>,
    pub path: Option<Vec<PathStep>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// A move to the neighbor chosen from a scoring pass.
    Move,
    /// One random move of a restart walk.
    Walk,
}

/// A state the search moved to. `score` is known for moves only.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStep {
    pub kind: StepKind,
    pub state: Assignment,
    pub score: Option<ScaledProb>,
}

/// An initialization paired with a search method, displayed as e.g. `Seq-Taboo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Algorithm {
    pub init: Init,
    pub method: Method,
}

impl Algorithm {
    /// The eleven algorithms of the solution-quality experiment, in reporting order.
    pub const ALL: [Algorithm; 11] = [
        Algorithm { init: Init::Rand, method: Method::Hill },
        Algorithm { init: Init::Rand, method: Method::Taboo },
        Algorithm { init: Init::Ml, method: Method::InitOnly },
        Algorithm { init: Init::Ml, method: Method::Hill },
        Algorithm { init: Init::Ml, method: Method::Taboo },
        Algorithm { init: Init::Mpe, method: Method::InitOnly },
        Algorithm { init: Init::Mpe, method: Method::Hill },
        Algorithm { init: Init::Mpe, method: Method::Taboo },
        Algorithm { init: Init::Seq, method: Method::InitOnly },
        Algorithm { init: Init::Seq, method: Method::Hill },
        Algorithm { init: Init::Seq, method: Method::Taboo },
    ];

    pub fn config(self, budget: usize, rng_seed: u64) -> SearchConfig {
        SearchConfig { method: self.method, init: self.init, budget, rng_seed, ..SearchConfig::default() }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::InitOnly => f.write_str(self.init.name()),
            Method::Hill => write!(f, "{}-Hill", self.init.name()),
            Method::Taboo => write!(f, "{}-Taboo", self.init.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown algorithm `{0}`")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (init, method) = match lower.split_once('-') {
            Some((i, "hill")) => (i, Method::Hill),
            Some((i, "taboo")) => (i, Method::Taboo),
            Some(_) => return Err(UnknownAlgorithm(s.to_string())),
            None => (lower.as_str(), Method::InitOnly),
        };
        let init = match init {
            "rand" => Init::Rand,
            "ml" => Init::Ml,
            "mpe" => Init::Mpe,
            "seq" => Init::Seq,
            _ => return Err(UnknownAlgorithm(s.to_string())),
        };
        Ok(Algorithm { init, method })
    }
}

/// Initializes as configured, then runs the configured method.
pub fn run(problem: &MapProblem<'_>, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    let cost = config.init.cost(problem.map_vars.len());
    if cost > config.budget {
        return Err(SearchError::BudgetTooSmall { cost, budget: config.budget });
    }
    if config.restart_walk_length == 0 {
        return Err(SearchError::WalkLength);
    }
    let mut rng = rng_from_seed(config.rng_seed);
    let mut buf = problem.trace.buffers();
    let start = match config.init {
        Init::Rand => init_random(problem.net, &problem.map_vars, &mut rng),
        Init::Mpe => init_mpe(problem)?,
        Init::Ml => init_ml(problem, &mut buf),
        Init::Seq => init_seq(problem, &mut buf),
    };
    Ok(search_from(problem, config, start, cost, &mut rng, &mut buf))
}

pub fn hill_climb(problem: &MapProblem<'_>, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    run(problem, &SearchConfig { method: Method::Hill, ..config.clone() })
}

pub fn taboo_search(problem: &MapProblem<'_>, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    run(problem, &SearchConfig { method: Method::Taboo, ..config.clone() })
}

struct BestTracker {
    values: Vec<usize>,
    score: Option<ScaledProb>,
    at: usize,
    history: Option<Vec<(usize, ScaledProb)>>,
}

impl BestTracker {
    fn offer(&mut self, values: &[usize], score: ScaledProb, at: usize) {
        let better = match self.score {
            None => true,
            Some(_) if self.values == values => false,
            Some(b) => improves(score, b),
        };
        if better {
            self.values.clear();
            self.values.extend_from_slice(values);
            self.score = Some(score);
            self.at = at;
            if let Some(h) = &mut self.history {
                h.push((at, score));
            }
        }
    }
}

/// The same probability reached through different trace paths can differ in
/// the last bits; gains below this relative margin are not improvements.
const IMPROVEMENT_MARGIN: f64 = 1e-12;

fn improves(score: ScaledProb, than: ScaledProb) -> bool {
    if than.is_zero() {
        !score.is_zero()
    } else {
        score.ratio(than) > 1.0 + IMPROVEMENT_MARGIN
    }
}

/// Runs the configured method from `start`, whose initialization already cost
/// `init_cost` evaluations. Walk moves draw from `rng`.
pub fn search_from(
    problem: &MapProblem<'_>,
    config: &SearchConfig,
    start: Assignment,
    init_cost: usize,
    rng: &mut impl Rng,
    buf: &mut TraceBuffers,
) -> SearchResult {
    let net = problem.net;
    let vars = &problem.map_vars;
    let mut state = problem.values_of(&start);
    let mut setting = problem.setting(&start);
    let mut best = BestTracker {
        values: state.clone(),
        score: None,
        at: init_cost,
        history: config.record_best_trace.then(Vec::new),
    };
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(state.clone());
    let mut evals = init_cost;
    let mut peaks = 0;
    let mut first_peak = None;
    let mut neighbor = state.clone();
    let mut path = config.record_path.then(Vec::new);
    let mut record = |kind, state: &[usize], score| {
        if let Some(p) = &mut path {
            p.push(PathStep { kind, state: problem.assignment_of(state), score });
        }
    };

    while config.method != Method::InitOnly && evals < config.budget {
        let ns = neighbor_scores_for(&problem.trace, net, vars, &setting, buf);
        // the starting state's score is credited to its initialization
        let base_at = if evals == init_cost { init_cost } else { evals + 1 };
        evals += 1;
        best.offer(&state, ns.base, base_at);
        let mut choice: Option<(usize, usize, ScaledProb)> = None;
        let mut ties = 0u32;
        for (i, row) in ns.scores.iter().enumerate() {
            for (x, &score) in row.iter().enumerate() {
                if x == state[i] {
                    continue;
                }
                neighbor[i] = x;
                best.offer(&neighbor, score, evals);
                if config.method == Method::Hill {
                    if choice.is_none_or(|(_, _, s)| score > s) {
                        choice = Some((i, x, score));
                    }
                } else if !visited.contains(&neighbor) {
                    // uniform choice among equally good unvisited neighbors
                    match choice {
                        Some((_, _, s)) if score < s => {}
                        Some((_, _, s)) if score == s => {
                            ties += 1;
                            if rng.gen_range(0..ties) == 0 {
                                choice = Some((i, x, score));
                            }
                        }
                        _ => {
                            ties = 1;
                            choice = Some((i, x, score));
                        }
                    }
                }
            }
            neighbor[i] = state[i];
        }
        if vars.is_empty() {
            break;
        }
        let improving = choice.is_some_and(|(_, _, s)| improves(s, ns.base));
        if !improving {
            peaks += 1;
            first_peak.get_or_insert(evals);
        }
        let take = match config.method {
            Method::Hill if improving => choice,
            Method::Taboo => choice,
            _ => None,
        };
        match take {
            Some((i, x, score)) => {
                move_to(&mut state, &mut neighbor, &mut setting, vars, i, x);
                visited.insert(state.clone());
                record(StepKind::Move, &state, Some(score));
            }
            None => {
                for _ in 0..config.restart_walk_length {
                    let i = rng.gen_range(0..vars.len());
                    let card = net.cardinality(vars[i]);
                    let mut x = rng.gen_range(0..card - 1);
                    if x >= state[i] {
                        x += 1;
                    }
                    move_to(&mut state, &mut neighbor, &mut setting, vars, i, x);
                    record(StepKind::Walk, &state, None);
                    if config.method == Method::Taboo {
                        visited.insert(state.clone());
                    }
                }
            }
        }
    }

    if best.score.is_none() {
        let score = problem.trace.evaluate_with(&setting, buf);
        best.offer(&state, score, init_cost);
    }
    SearchResult {
        best: MapSolution { assignment: problem.assignment_of(&best.values), prob: best.score.expect("scored") },
        evaluations_used: evals,
        evaluations_to_best: best.at,
        peaks_found: peaks,
        first_peak_evaluation: first_peak,
        visited_best_trace: best.history,
        path,
    }
}

fn move_to(
    state: &mut [usize],
    neighbor: &mut [usize],
    setting: &mut IndicatorSetting,
    vars: &[VarId],
    i: usize,
    x: usize,
) {
    state[i] = x;
    neighbor[i] = x;
    setting.bind(vars[i], x);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::chain_ab;
    use crate::network::NetworkBuilder;

    /// Uniform roots A, B and evidence on their common child C:
    /// Pr(a, b, c1) = 0.25 * (0.5, 0.2, 0.1, 0.9) over ab = 00, 01, 10, 11.
    fn landscape() -> BayesianNetwork {
        let mut b = NetworkBuilder::new();
        let a = b.variable("A", 2);
        let bb = b.variable("B", 2);
        let c = b.variable("C", 2);
        b.cpt(a, &[], vec![0.5, 0.5]);
        b.cpt(bb, &[], vec![0.5, 0.5]);
        b.cpt(c, &[a, bb], vec![0.5, 0.5, 0.8, 0.2, 0.9, 0.1, 0.1, 0.9]);
        b.build().unwrap()
    }

    fn config(method: Method, budget: usize) -> SearchConfig {
        SearchConfig { method, init: Init::Rand, budget, ..SearchConfig::default() }
    }

    #[test]
    fn chain_hill_step() {
        let net = chain_ab();
        let e = Assignment::from_pairs([(1, 1)]);
        let problem = MapProblem::new(&net, &[0], &e).unwrap();
        let mut buf = problem.trace().buffers();
        let start = Assignment::from_pairs([(0, 0)]);
        let r = search_from(&problem, &config(Method::Hill, 150), start, 0, &mut rng_from_seed(1), &mut buf);
        assert_eq!(r.best.assignment, Assignment::from_pairs([(0, 1)]));
        assert!((r.best.score() - 0.54).abs() < 1e-15);
        assert_eq!(r.evaluations_to_best, 1);
        assert_eq!(r.evaluations_used, 150);
        assert_eq!(r.first_peak_evaluation, Some(2));
    }

    #[test]
    fn init_only_and_budget_boundary() {
        let net = chain_ab();
        let e = Assignment::from_pairs([(1, 1)]);
        let problem = MapProblem::new(&net, &[0], &e).unwrap();
        for init in [Init::Mpe, Init::Ml, Init::Seq] {
            let alone =
                run(&problem, &SearchConfig { method: Method::InitOnly, init, ..SearchConfig::default() }).unwrap();
            assert_eq!((alone.evaluations_used, alone.evaluations_to_best, alone.peaks_found), (1, 1, 0));
            assert!((alone.best.score() - 0.54).abs() < 1e-15);
            let hill =
                run(&problem, &SearchConfig { method: Method::Hill, init, budget: 1, ..SearchConfig::default() })
                    .unwrap();
            assert_eq!(hill.evaluations_used, 1);
            assert_eq!(hill.best.assignment, Assignment::from_pairs([(0, 1)]));
        }
        let zero = run(&problem, &config(Method::Hill, 0)).unwrap();
        assert_eq!((zero.evaluations_used, zero.evaluations_to_best), (0, 0));
        assert_eq!(
            run(&problem, &SearchConfig { init: Init::Mpe, budget: 0, ..SearchConfig::default() }),
            Err(SearchError::BudgetTooSmall { cost: 1, budget: 0 })
        );
    }

    #[test]
    fn taboo_passes_a_peak_that_stops_hill() {
        let net = landscape();
        let e = Assignment::from_pairs([(2, 1)]);
        let problem = MapProblem::new(&net, &[0, 1], &e).unwrap();
        let start = Assignment::from_pairs([(0, 0), (1, 0)]);
        let mut buf = problem.trace().buffers();

        let taboo = search_from(&problem, &config(Method::Taboo, 2), start.clone(), 0, &mut rng_from_seed(3), &mut buf);
        assert_eq!(taboo.best.assignment, Assignment::from_pairs([(0, 1), (1, 1)]));
        assert!((taboo.best.score() - 0.225).abs() < 1e-15);
        assert_eq!(taboo.evaluations_to_best, 2);
        assert_eq!(taboo.peaks_found, 1);

        let hill = search_from(&problem, &config(Method::Hill, 1), start, 0, &mut rng_from_seed(3), &mut buf);
        assert_eq!(hill.best.assignment, Assignment::from_pairs([(0, 0), (1, 0)]));
        assert!((hill.best.score() - 0.125).abs() < 1e-15);
        assert_eq!(hill.first_peak_evaluation, Some(1));
    }

    #[test]
    fn seeded_runs_replay() {
        let net = landscape();
        let e = Assignment::from_pairs([(2, 1)]);
        let problem = MapProblem::new(&net, &[0, 1], &e).unwrap();
        for method in [Method::Hill, Method::Taboo] {
            let c = SearchConfig { rng_seed: 77, record_best_trace: true, ..config(method, 20) };
            let a = run(&problem, &c).unwrap();
            assert_eq!(a, run(&problem, &c).unwrap());
            assert!((a.best.score() - 0.225).abs() < 1e-15);
            let history = a.visited_best_trace.unwrap();
            assert!(history.windows(2).all(|w| w[0].1 < w[1].1 && w[0].0 <= w[1].0));
        }
    }

    #[test]
    fn empty_map_set() {
        let net = chain_ab();
        let e = Assignment::from_pairs([(1, 1)]);
        let problem = MapProblem::new(&net, &[], &e).unwrap();
        let r = run(&problem, &config(Method::Taboo, 150)).unwrap();
        assert!(r.best.assignment.is_empty());
        assert!((r.best.score() - 0.62).abs() < 1e-15);
        assert_eq!(r.evaluations_used, 1);
    }

    #[test]
    fn problem_validation() {
        let net = chain_ab();
        let e = Assignment::from_pairs([(1, 1)]);
        assert!(matches!(
            MapProblem::new(&net, &[1], &e),
            Err(SearchError::Inference(InferenceError::MapEvidenceOverlap(1)))
        ));
        assert!(MapProblem::new(&net, &[5], &e).is_err());
        let mut b = NetworkBuilder::new();
        let a = b.variable("A", 2);
        let c = b.variable("C", 2);
        b.cpt(a, &[], vec![1.0, 0.0]);
        b.cpt(c, &[a], vec![1.0, 0.0, 0.0, 1.0]);
        let det = b.build().unwrap();
        assert!(matches!(
            MapProblem::new(&det, &[0], &Assignment::from_pairs([(1, 1)])),
            Err(SearchError::Inference(InferenceError::ZeroProbabilityEvidence))
        ));
    }

    #[test]
    fn algorithm_names_round_trip() {
        let names: Vec<String> = Algorithm::ALL.iter().map(ToString::to_string).collect();
        assert_eq!(
            names,
            [
                "Rand-Hill",
                "Rand-Taboo",
                "ML",
                "ML-Hill",
                "ML-Taboo",
                "MPE",
                "MPE-Hill",
                "MPE-Taboo",
                "Seq",
                "Seq-Hill",
                "Seq-Taboo"
            ]
        );
        for a in Algorithm::ALL {
            assert_eq!(a.to_string().parse::<Algorithm>(), Ok(a));
        }
        assert!("Rand".parse::<Algorithm>().is_ok());
        assert!("Seq-Anneal".parse::<Algorithm>().is_err());
    }
}
