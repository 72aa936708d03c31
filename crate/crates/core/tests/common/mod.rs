#![allow(dead_code)]

use mapsearch::netgen::{derive_seed, gen_structure_edge_prob, quantify, rng_from_seed, sample_evidence};
use mapsearch::{Assignment, BayesianNetwork, VarId};
use rand::Rng;

/// A small random query: an edge-probability network, leaf evidence with
/// some leaves dropped, and MAP variables drawn from what remains.
pub struct Case {
    pub net: BayesianNetwork,
    pub map_vars: Vec<VarId>,
    pub evidence: Assignment,
}

pub fn random_case(seed: u64, max_vars: usize, bias: f64) -> Case {
    let mut rng = rng_from_seed(derive_seed(seed, 0xCA5E));
    let n = rng.gen_range(2..=max_vars);
    let p = rng.gen_range(0.15..0.5);
    let net = quantify(&gen_structure_edge_prob(n, p, &mut rng), bias, &mut rng);
    let mut evidence = sample_evidence(&net, &mut rng);
    for v in 0..n {
        if evidence.contains(v) && rng.gen_bool(0.3) {
            evidence.unbind(v);
        }
    }
    let free: Vec<VarId> = (0..n).filter(|&v| !evidence.contains(v)).collect();
    let mut map_vars: Vec<VarId> = free.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if map_vars.is_empty() && !free.is_empty() {
        map_vars.push(free[rng.gen_range(0..free.len())]);
    }
    Case { net, map_vars, evidence }
}

/// Every complete assignment of `vars`, first variable slowest.
pub fn all_states(net: &BayesianNetwork, vars: &[VarId]) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for &v in vars {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..net.cardinality(v)).map(move |x| {
                    let mut b = a.clone();
                    b.bind(v, x);
                    b
                })
            })
            .collect();
    }
    out
}
