//! Exhaustive enumeration of the joint distribution. Used as a test oracle
//! for every elimination-based routine, so it deliberately shares no code
//! with them beyond CPT lookup.

use std::collections::BTreeSet;

use super::{InferenceError, MapSolution};
use crate::network::{Assignment, AssignmentError, BayesianNetwork, VarId};
use crate::prob::ScaledProb;

/// Largest number of joint configurations the oracle will enumerate.
pub const MAX_ENUMERATION: u128 = 1 << 24;

fn free_vars(net: &BayesianNetwork, bound: &Assignment) -> Result<Vec<VarId>, InferenceError> {
    let free: Vec<VarId> = (0..net.num_vars()).filter(|&v| !bound.contains(v)).collect();
    let size: u128 = free.iter().map(|&v| net.cardinality(v) as u128).product();
    if size > MAX_ENUMERATION {
        return Err(InferenceError::InstanceTooLarge(size));
    }
    Ok(free)
}

/// Calls `visit` with every completion of `partial` over `free`, in
/// lexicographic order with the first variable slowest.
fn for_each_completion(
    net: &BayesianNetwork,
    partial: &Assignment,
    free: &[VarId],
    mut visit: impl FnMut(&[usize], f64),
) {
    let mut full = vec![0usize; net.num_vars()];
    for (v, x) in partial.iter() {
        full[v] = x;
    }
    let mut digits = vec![0usize; free.len()];
    loop {
        for (&v, &d) in free.iter().zip(&digits) {
            full[v] = d;
        }
        let joint: f64 = net.cpts().iter().map(|cpt| cpt.prob(full[cpt.child()], |p| full[p])).product();
        visit(&digits, joint);
        let mut k = free.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < net.cardinality(free[k]) {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// `Pr(partial)` by summing the joint over all completions.
pub fn brute_force_probability(net: &BayesianNetwork, partial: &Assignment) -> Result<f64, InferenceError> {
    partial.validate(net)?;
    let free = free_vars(net, partial)?;
    let mut total = 0.0;
    for_each_completion(net, partial, &free, |_, p| total += p);
    Ok(total)
}

/// MAP by enumeration. Ties go to the lexicographically smallest MAP
/// configuration in ascending variable order.
pub fn brute_force_map(
    net: &BayesianNetwork,
    map_vars: &[VarId],
    evidence: &Assignment,
) -> Result<MapSolution, InferenceError> {
    evidence.validate(net)?;
    let set: BTreeSet<VarId> = map_vars.iter().copied().collect();
    if let Some(&v) = set.iter().find(|&&v| v >= net.num_vars()) {
        return Err(AssignmentError::UnknownVariable(v).into());
    }
    if let Some(&v) = set.iter().find(|&&v| evidence.contains(v)) {
        return Err(InferenceError::MapEvidenceOverlap(v));
    }
    let free = free_vars(net, evidence)?;
    let map_vars: Vec<VarId> = set.into_iter().collect();
    let map_pos: Vec<usize> = map_vars.iter().map(|v| free.binary_search(v).expect("free")).collect();
    let map_size: usize = map_vars.iter().map(|&v| net.cardinality(v)).product();
    let mut scores = vec![0.0f64; map_size];
    for_each_completion(net, evidence, &free, |digits, p| {
        let idx = map_pos.iter().zip(&map_vars).fold(0, |acc, (&pos, &v)| acc * net.cardinality(v) + digits[pos]);
        scores[idx] += p;
    });
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if scores[best] == 0.0 {
        return Err(InferenceError::ZeroProbabilityEvidence);
    }
    let mut rest = best;
    let mut assignment = Assignment::new();
    for &v in map_vars.iter().rev() {
        let card = net.cardinality(v);
        assignment.bind(v, rest % card);
        rest /= card;
    }
    Ok(MapSolution { assignment, prob: ScaledProb::from_f64(scores[best]) })
}
