mod common;

use std::collections::{BTreeSet, HashSet};

use common::random_case;
use mapsearch::elim::{min_fill_order, moral_graph};
use mapsearch::inference::{brute_force_map, brute_force_probability, exact_map};
use mapsearch::search::{run, Init, MapProblem, Method, SearchConfig, StepKind};
use mapsearch::VarId;
use proptest::prelude::*;

const INITS: [Init; 4] = [Init::Rand, Init::Ml, Init::Mpe, Init::Seq];

fn config(method: Method, init: Init, budget: usize, seed: u64) -> SearchConfig {
    SearchConfig { method, init, budget, rng_seed: seed, record_path: true, ..SearchConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn runs_respect_their_contracts(
        seed in any::<u64>(),
        budget in 0usize..60,
        init in 0usize..4,
        taboo in any::<bool>(),
        bias in prop_oneof![Just(0.0), Just(0.25), Just(0.5)],
    ) {
        let case = random_case(seed, 12, bias);
        let problem = MapProblem::new(&case.net, &case.map_vars, &case.evidence).unwrap();
        let init = INITS[init];
        let method = if taboo { Method::Taboo } else { Method::Hill };
        let c = config(method, init, budget, seed);
        let Ok(result) = run(&problem, &c) else {
            prop_assert!(init.cost(case.map_vars.len()) > budget);
            return Ok(());
        };

        prop_assert!(result.evaluations_used <= budget);
        prop_assert!(result.evaluations_to_best <= result.evaluations_used.max(init.cost(case.map_vars.len())));
        prop_assert_eq!(&result, &run(&problem, &c).unwrap());

        let joint = |a: &mapsearch::Assignment| brute_force_probability(&case.net, &a.merged(&case.evidence)).unwrap();
        prop_assert!(result.best.prob.rel_eq(mapsearch::ScaledProb::from_f64(joint(&result.best.assignment)), 1e-9));
        let exact = brute_force_map(&case.net, &case.map_vars, &case.evidence).unwrap();
        prop_assert!(result.best.score() <= exact.score() * (1.0 + 1e-9));

        let path = result.path.unwrap();
        for step in &path {
            if let Some(score) = step.score {
                prop_assert!(score <= result.best.prob || score.rel_eq(result.best.prob, 1e-12));
            }
        }
        match method {
            Method::Taboo => {
                let mut seen = HashSet::new();
                for step in path.iter().filter(|s| s.kind == StepKind::Move) {
                    prop_assert!(seen.insert(step.state.clone()), "taboo revisited {:?}", step.state);
                }
            }
            _ => {
                for segment in path.split(|s| s.kind == StepKind::Walk) {
                    for pair in segment.windows(2) {
                        prop_assert!(pair[1].score.unwrap() > pair[0].score.unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn generous_budgets_reach_the_exact_map() {
    const INSTANCES: u64 = 500;
    for method in [Method::Hill, Method::Taboo] {
        let mut hits = 0;
        for i in 0..INSTANCES {
            let case = random_case(i, 12, [0.0, 0.125, 0.25, 0.375, 0.5][i as usize % 5]);
            let problem = MapProblem::new(&case.net, &case.map_vars, &case.evidence).unwrap();
            let result = run(&problem, &config(method, Init::Rand, 5000, i)).unwrap();
            let set: BTreeSet<VarId> = case.map_vars.iter().copied().collect();
            let order = min_fill_order(&moral_graph(&case.net), Some(&set));
            let exact = exact_map(&case.net, &case.map_vars, &case.evidence, &order).unwrap();
            hits += usize::from(result.best.prob.rel_eq(exact.prob, 1e-9));
        }
        assert!(hits as f64 >= 0.99 * INSTANCES as f64, "{method:?}: {hits}/{INSTANCES}");
    }
}

#[test]
fn taboo_and_hill_share_their_first_move() {
    let mut compared = 0;
    for i in 0..200u64 {
        let case = random_case(i, 12, 0.5);
        let problem = MapProblem::new(&case.net, &case.map_vars, &case.evidence).unwrap();
        let first = |method| {
            let result = run(&problem, &config(method, Init::Rand, 10, i)).unwrap();
            result.path.unwrap().into_iter().next()
        };
        if let (Some(h), Some(t)) = (first(Method::Hill), first(Method::Taboo)) {
            if h.kind == StepKind::Move {
                assert_eq!(h.state, t.state, "instance {i}");
                compared += 1;
            }
        }
    }
    assert!(compared > 100);
}
