//! Exact inference by variable elimination.
//!
//! Evidence is absorbed by slicing every CPT factor before elimination. Sum
//! and max eliminations share one bucket routine; max steps record argmax
//! tables that are replayed in reverse elimination order to recover a
//! maximizing assignment, breaking ties toward the lowest value index.

mod oracle;

pub use oracle::{brute_force_map, brute_force_probability, MAX_ENUMERATION};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::elim::EliminationOrder;
use crate::factor::{ArgmaxTable, Factor};
use crate::network::{Assignment, AssignmentError, BayesianNetwork, VarId};
use crate::prob::ScaledProb;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("elimination order covers {found} variables, network has {expected}")]
    OrderLength { expected: usize, found: usize },
    #[error("elimination order does not eliminate all non-MAP variables first")]
    UnconstrainedOrder,
    #[error("MAP variable {0} is also bound by the evidence")]
    MapEvidenceOverlap(VarId),
    #[error("enumeration over {0} joint configurations exceeds the oracle limit")]
    InstanceTooLarge(u128),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
}

/// A MAP (or MPE) answer: the maximizing instantiation and `Pr(s, e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSolution {
    pub assignment: Assignment,
    pub prob: ScaledProb,
}

impl MapSolution {
    /// `Pr(s, e)` as a plain float (may underflow on very large networks).
    pub fn score(&self) -> f64 {
        self.prob.to_f64()
    }

    /// Natural log of `Pr(s, e)`.
    pub fn log_score(&self) -> f64 {
        self.prob.ln()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Sum,
    Max,
    Keep,
}

struct Eliminated {
    remaining: Factor,
    tracebacks: Vec<ArgmaxTable>,
}

fn check_order(net: &BayesianNetwork, order: &EliminationOrder) -> Result<(), InferenceError> {
    if order.len() != net.num_vars() {
        return Err(InferenceError::OrderLength { expected: net.num_vars(), found: order.len() });
    }
    Ok(())
}

/// Eliminates every unbound variable according to `step`, returning the
/// product of whatever remains.
fn eliminate(
    net: &BayesianNetwork,
    evidence: &Assignment,
    order: &EliminationOrder,
    step: impl Fn(VarId) -> Step,
) -> Eliminated {
    let mut factors: Vec<Factor> = net.cpts().iter().map(|cpt| Factor::from_cpt(net, cpt).reduce(evidence)).collect();
    let mut tracebacks = Vec::new();
    for &var in order.sequence() {
        if evidence.contains(var) {
            continue;
        }
        let kind = step(var);
        if kind == Step::Keep {
            continue;
        }
        let (bucket, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        let product = bucket.iter().fold(Factor::unit(), |acc, f| acc.product(f));
        match kind {
            Step::Sum => factors.push(product.sum_out(var)),
            Step::Max => {
                let (f, table) = product.max_out(var);
                factors.push(f);
                tracebacks.push(table);
            }
            Step::Keep => unreachable!(),
        }
    }
    let remaining = factors.iter().fold(Factor::unit(), |acc, f| acc.product(f));
    Eliminated { remaining, tracebacks }
}

fn traceback(tables: &[ArgmaxTable]) -> Assignment {
    let mut out = Assignment::new();
    for table in tables.iter().rev() {
        let value = table.lookup(&out);
        out.bind(table.var, value);
    }
    out
}

/// `Pr(e)`; one for empty evidence, possibly zero.
pub fn probability_of_evidence(
    net: &BayesianNetwork,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> Result<ScaledProb, InferenceError> {
    evidence.validate(net)?;
    check_order(net, order)?;
    Ok(eliminate(net, evidence, order, |_| Step::Sum).remaining.scalar())
}

/// `Pr(x, e)` for every variable and value. A bound variable carries `Pr(e)`
/// on its bound value and zero elsewhere.
pub fn posterior_marginals(
    net: &BayesianNetwork,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> Result<Vec<Vec<ScaledProb>>, InferenceError> {
    evidence.validate(net)?;
    check_order(net, order)?;
    let mut out = Vec::with_capacity(net.num_vars());
    let mut pr_e = None;
    for var in 0..net.num_vars() {
        let card = net.cardinality(var);
        if let Some(bound) = evidence.get(var) {
            let p = *pr_e.get_or_insert_with(|| eliminate(net, evidence, order, |_| Step::Sum).remaining.scalar());
            out.push((0..card).map(|x| if x == bound { p } else { ScaledProb::ZERO }).collect());
        } else {
            let kept = eliminate(net, evidence, order, |v| if v == var { Step::Keep } else { Step::Sum });
            debug_assert_eq!(kept.remaining.scope(), &[var]);
            out.push((0..card).map(|x| kept.remaining.entry(x)).collect());
        }
    }
    Ok(out)
}

/// Most probable completion of `evidence` and its joint probability.
pub fn mpe(
    net: &BayesianNetwork,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> Result<MapSolution, InferenceError> {
    evidence.validate(net)?;
    check_order(net, order)?;
    let done = eliminate(net, evidence, order, |_| Step::Max);
    let prob = done.remaining.scalar();
    if prob.is_zero() {
        return Err(InferenceError::ZeroProbabilityEvidence);
    }
    let assignment = traceback(&done.tracebacks).merged(evidence);
    Ok(MapSolution { assignment, prob })
}

/// Exact MAP over `map_vars`: sums out everything else, then maximizes.
/// `order` must eliminate all variables outside `map_vars` first.
pub fn exact_map(
    net: &BayesianNetwork,
    map_vars: &[VarId],
    evidence: &Assignment,
    order: &EliminationOrder,
) -> Result<MapSolution, InferenceError> {
    evidence.validate(net)?;
    check_order(net, order)?;
    let set: BTreeSet<VarId> = map_vars.iter().copied().collect();
    if let Some(&v) = set.iter().find(|&&v| evidence.contains(v)) {
        return Err(InferenceError::MapEvidenceOverlap(v));
    }
    if let Some(&v) = set.iter().find(|&&v| v >= net.num_vars()) {
        return Err(AssignmentError::UnknownVariable(v).into());
    }
    if !order.eliminates_first_outside(&set) {
        return Err(InferenceError::UnconstrainedOrder);
    }
    let done = eliminate(net, evidence, order, |v| if set.contains(&v) { Step::Max } else { Step::Sum });
    let prob = done.remaining.scalar();
    if prob.is_zero() {
        return Err(InferenceError::ZeroProbabilityEvidence);
    }
    Ok(MapSolution { assignment: traceback(&done.tracebacks), prob })
}
