use rand::Rng;

use super::{MapProblem, SearchError};
use crate::inference::mpe;
use crate::network::{Assignment, BayesianNetwork, VarId};
use crate::prob::ScaledProb;
use crate::trace::{IndicatorSetting, TraceBuffers};

/// Each MAP variable independently uniform over its values.
pub fn init_random(net: &BayesianNetwork, map_vars: &[VarId], rng: &mut impl Rng) -> Assignment {
    map_vars.iter().map(|&v| (v, rng.gen_range(0..net.cardinality(v)))).collect()
}

/// The MPE solution projected onto the MAP variables.
pub fn init_mpe(problem: &MapProblem<'_>) -> Result<Assignment, SearchError> {
    let sol = mpe(problem.net, &problem.evidence, &problem.order)?;
    Ok(sol.assignment.project(&problem.map_vars))
}

fn argmax(scores: impl Iterator<Item = ScaledProb>) -> (usize, ScaledProb) {
    let mut best = (0, ScaledProb::ZERO);
    for (x, p) in scores.enumerate() {
        if x == 0 || p > best.1 {
            best = (x, p);
        }
    }
    best
}

/// Each MAP variable at its most likely value given `e`, from one reverse pass.
pub fn init_ml(problem: &MapProblem<'_>, buf: &mut TraceBuffers) -> Assignment {
    let setting = IndicatorSetting::from_assignment(problem.net, &problem.evidence);
    problem.trace.differentiate(&setting, buf);
    problem
        .map_vars
        .iter()
        .map(|&v| (v, argmax((0..problem.net.cardinality(v)).map(|x| problem.trace.partial(buf, v, x))).0))
        .collect()
}

/// Commits one MAP variable per pass: the (variable, value) pair with the
/// highest `Pr(x, e, y)` given the commitments `y` so far. Ties go to the
/// lowest variable, then the lowest value; if every pair has probability zero
/// the lowest unassigned variable takes value 0.
pub fn init_seq(problem: &MapProblem<'_>, buf: &mut TraceBuffers) -> Assignment {
    let net = problem.net;
    let mut setting = IndicatorSetting::from_assignment(net, &problem.evidence);
    let mut remaining = problem.map_vars.clone();
    let mut out = Assignment::new();
    while !remaining.is_empty() {
        problem.trace.differentiate(&setting, buf);
        let mut pick = (0, 0, ScaledProb::ZERO);
        for (i, &v) in remaining.iter().enumerate() {
            let (x, p) = argmax((0..net.cardinality(v)).map(|x| problem.trace.partial(buf, v, x)));
            if p > pick.2 {
                pick = (i, x, p);
            }
        }
        let var = remaining.remove(pick.0);
        setting.bind(var, pick.1);
        out.bind(var, pick.1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::rng_from_seed;
    use crate::network::tests::chain_ab;
    use crate::network::NetworkBuilder;

    #[test]
    fn chain_initializations() {
        let net = chain_ab();
        let e = Assignment::from_pairs([(1, 1)]);
        let problem = MapProblem::new(&net, &[0], &e).unwrap();
        let mut buf = problem.trace().buffers();
        let want = Assignment::from_pairs([(0, 1)]);
        assert_eq!(init_mpe(&problem).unwrap(), want);
        assert_eq!(init_ml(&problem, &mut buf), want);
        assert_eq!(init_seq(&problem, &mut buf), want);
    }

    #[test]
    fn uniform_ties_go_to_zero() {
        let mut b = NetworkBuilder::new();
        for i in 0..4 {
            let v = b.variable(format!("U{i}"), 2);
            b.cpt(v, &[], vec![0.5, 0.5]);
        }
        let net = b.build().unwrap();
        let problem = MapProblem::new(&net, &[0, 1, 2, 3], &Assignment::new()).unwrap();
        let mut buf = problem.trace().buffers();
        let zeros: Assignment = (0..4).map(|v| (v, 0)).collect();
        assert_eq!(init_ml(&problem, &mut buf), zeros);
        assert_eq!(init_seq(&problem, &mut buf), zeros);
    }

    #[test]
    fn seq_commits_most_confident_first() {
        // A -> B -> C, S = {A, B}, e = {C=1}
        let mut b = NetworkBuilder::new();
        let a = b.variable("A", 2);
        let bb = b.variable("B", 2);
        let c = b.variable("C", 2);
        b.cpt(a, &[], vec![0.3, 0.7]);
        b.cpt(bb, &[a], vec![0.6, 0.4, 0.05, 0.95]);
        b.cpt(c, &[bb], vec![0.5, 0.5, 0.2, 0.8]);
        let net = b.build().unwrap();
        let e = Assignment::from_pairs([(c, 1)]);
        let problem = MapProblem::new(&net, &[a, bb], &e).unwrap();
        let mut buf = problem.trace().buffers();

        // Pr(a1, c1) = 0.7 (0.05 * 0.5 + 0.95 * 0.8) = 0.5495
        // Pr(b1, c1) = (0.3 * 0.4 + 0.7 * 0.95) * 0.8 = 0.628
        // so B=1 is committed first, then A given B=1: 0.7*0.95 > 0.3*0.4
        let s = init_seq(&problem, &mut buf);
        assert_eq!(s, Assignment::from_pairs([(a, 1), (bb, 1)]));
        let single = MapProblem::new(&net, &[a], &e).unwrap();
        assert_eq!(init_seq(&single, &mut buf), init_ml(&single, &mut buf));
    }

    #[test]
    fn seq_with_forced_variable() {
        // A is forced to 0 given the evidence; B is unconstrained
        let mut b = NetworkBuilder::new();
        let a = b.variable("A", 2);
        let bb = b.variable("B", 2);
        let c = b.variable("C", 2);
        b.cpt(a, &[], vec![0.5, 0.5]);
        b.cpt(bb, &[], vec![0.5, 0.5]);
        b.cpt(c, &[a], vec![0.0, 1.0, 1.0, 0.0]);
        let net = b.build().unwrap();
        let problem = MapProblem::new(&net, &[a, bb], &Assignment::from_pairs([(c, 1)])).unwrap();
        let mut buf = problem.trace().buffers();
        let s = init_seq(&problem, &mut buf);
        assert_eq!(s, Assignment::from_pairs([(a, 0), (bb, 0)]));
        assert!(!problem.score(&s).unwrap().is_zero());
    }

    #[test]
    fn random_init_frequencies() {
        let net = {
            let mut b = NetworkBuilder::new();
            for i in 0..3 {
                let v = b.variable(format!("R{i}"), 2);
                b.cpt(v, &[], vec![0.5, 0.5]);
            }
            b.build().unwrap()
        };
        let mut rng = rng_from_seed(2024);
        let mut ones = [0usize; 3];
        for _ in 0..10_000 {
            for (v, x) in init_random(&net, &[0, 1, 2], &mut rng).iter() {
                ones[v] += x;
            }
        }
        for n in ones {
            assert!((n as f64 / 10_000.0 - 0.5).abs() <= 0.02, "{n}");
        }
        assert!(init_random(&net, &[], &mut rng).is_empty());
        assert_eq!(
            init_random(&net, &[0, 2], &mut rng_from_seed(5)),
            init_random(&net, &[0, 2], &mut rng_from_seed(5))
        );
    }
}
