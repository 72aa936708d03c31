//! Random benchmark networks.
//!
//! Two structure generators over an ordered list of binary variables, with all
//! edges pointing from lower to higher index:
//!
//! - **edge probability**: every pair gets an edge independently with probability `p`;
//! - **connectivity**: each variable is a root with a probability that falls
//!   linearly along the order (about [`ROOT_FRACTION`] of all variables end up
//!   roots, mostly early ones); otherwise it draws about `μ(c)` distinct parents
//!   uniformly from its predecessors. `μ(c)` comes from a checked-in calibration
//!   table chosen so the median min-fill width of 100-variable networks lands
//!   near `c`.
//!
//! Quantification with bias `b`: root rows are uniform points on the simplex;
//! every other row puts `v ~ U[0, b)` on one value (chosen by a fair coin) and
//! `1 - v` on the other.

use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elim::{min_fill_order, moral_graph, order_width};
use crate::network::{Assignment, BayesianNetwork, NetworkBuilder, VarId};

/// Expected fraction of roots under the connectivity generator.
pub const ROOT_FRACTION: f64 = 0.25;

/// Network size the connectivity table was calibrated for.
pub const CALIBRATION_NODES: usize = 100;

/// Deterministic RNG used throughout generation and search.
pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parent lists over variables `0..n`; every parent precedes its child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<VarId>>,
}

impl Dag {
    pub fn from_parents(parents: Vec<Vec<VarId>>) -> Self {
        debug_assert!(parents.iter().enumerate().all(|(i, ps)| ps.iter().all(|&p| p < i)));
        Dag { parents }
    }

    pub fn num_vars(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v]
    }

    pub fn num_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn roots(&self) -> Vec<VarId> {
        (0..self.num_vars()).filter(|&v| self.parents[v].is_empty()).collect()
    }

    /// The same structure with uniform CPTs; enough for width computations.
    pub fn skeleton(&self) -> BayesianNetwork {
        let mut b = NetworkBuilder::new();
        for i in 0..self.num_vars() {
            b.variable(format!("X{i}"), 2);
        }
        for (i, ps) in self.parents.iter().enumerate() {
            b.cpt(i, ps, vec![0.5; 2 << ps.len()]);
        }
        b.build().expect("generated structures are valid")
    }
}

pub fn gen_structure_edge_prob(n: usize, p: f64, rng: &mut impl Rng) -> Dag {
    let mut parents = vec![Vec::new(); n];
    for (child, ps) in parents.iter_mut().enumerate() {
        for parent in 0..child {
            if rng.gen_bool(p) {
                ps.push(parent);
            }
        }
    }
    Dag { parents }
}

/// Connectivity-style structure with an explicit mean parent count for non-roots.
pub fn gen_structure_parent_mean(n: usize, mean_parents: f64, rng: &mut impl Rng) -> Dag {
    let whole = mean_parents.floor();
    let frac = mean_parents - whole;
    let mut parents = vec![Vec::new(); n];
    for (i, ps) in parents.iter_mut().enumerate().skip(1) {
        if rng.gen_bool(root_probability(i, n)) {
            continue;
        }
        let k = (whole as usize + usize::from(rng.gen_bool(frac))).min(i);
        let mut chosen = sample(rng, i, k).into_vec();
        chosen.sort_unstable();
        *ps = chosen;
    }
    Dag { parents }
}

/// Falls linearly from `2 * ROOT_FRACTION` at the front of the order to zero.
fn root_probability(i: usize, n: usize) -> f64 {
    (2.0 * ROOT_FRACTION * (1.0 - i as f64 / n as f64)).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub c: usize,
    pub mean_parents: f64,
    pub median_width: usize,
}

/// The checked-in connectivity calibration table, ascending in `c`.
pub fn calibration_table() -> &'static [CalibrationEntry] {
    static TABLE: OnceLock<Vec<CalibrationEntry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        serde_json::from_str(include_str!("../data/connectivity_calibration.json")).expect("calibration table parses")
    })
}

pub fn max_connectivity() -> usize {
    calibration_table().last().map_or(0, |e| e.c)
}

pub fn gen_structure_connectivity(n: usize, c: usize, rng: &mut impl Rng) -> Result<Dag, GenError> {
    let entry =
        calibration_table().iter().find(|e| e.c == c).ok_or(GenError::Connectivity { c, max: max_connectivity() })?;
    Ok(gen_structure_parent_mean(n, entry.mean_parents, rng))
}

/// Median unconstrained min-fill width over `pilots` networks.
pub fn pilot_median_width(n: usize, mean_parents: f64, pilots: usize, seed: u64) -> usize {
    let mut widths: Vec<usize> = (0..pilots)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let g = moral_graph(&gen_structure_parent_mean(n, mean_parents, &mut rng).skeleton());
            order_width(&g, &min_fill_order(&g, None))
        })
        .collect();
    widths.sort_unstable();
    widths[widths.len() / 2]
}

/// Bisects the mean parent count until the pilot median width hits `c`,
/// returning the closest entry found.
pub fn calibrate_connectivity(c: usize, pilots: usize, seed: u64) -> CalibrationEntry {
    let (mut lo, mut hi) = (1.0f64, 12.0f64);
    let mut best = CalibrationEntry {
        c,
        mean_parents: 1.0,
        median_width: pilot_median_width(CALIBRATION_NODES, 1.0, pilots, seed),
    };
    for _ in 0..24 {
        if best.median_width == c {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let w = pilot_median_width(CALIBRATION_NODES, mid, pilots, seed);
        if w.abs_diff(c) < best.median_width.abs_diff(c) {
            best = CalibrationEntry { c, mean_parents: mid, median_width: w };
        }
        if w < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Bias-`b` quantification of a binary structure.
pub fn quantify(dag: &Dag, bias: f64, rng: &mut impl Rng) -> BayesianNetwork {
    assert!((0.0..=0.5).contains(&bias), "bias must lie in [0, 0.5]");
    let mut b = NetworkBuilder::new();
    for i in 0..dag.num_vars() {
        b.variable(format!("X{i}"), 2);
    }
    for (i, ps) in dag.parents.iter().enumerate() {
        let rows = 1usize << ps.len();
        let mut table = Vec::with_capacity(2 * rows);
        for _ in 0..rows {
            if ps.is_empty() {
                let v: f64 = rng.gen();
                table.extend([v, 1.0 - v]);
            } else {
                let v = if bias > 0.0 { rng.gen_range(0.0..bias) } else { 0.0 };
                if rng.gen_bool(0.5) {
                    table.extend([v, 1.0 - v]);
                } else {
                    table.extend([1.0 - v, v]);
                }
            }
        }
        b.cpt(i, ps, table);
    }
    b.build().expect("quantified rows are normalized")
}

/// All roots, or a uniform random subset of `cap` of them. Sorted.
pub fn select_map_vars(net: &BayesianNetwork, cap: usize, rng: &mut impl Rng) -> Vec<VarId> {
    let roots = net.roots();
    if roots.len() <= cap {
        return roots;
    }
    let mut chosen: Vec<VarId> = sample(rng, roots.len(), cap).into_iter().map(|i| roots[i]).collect();
    chosen.sort_unstable();
    chosen
}

/// Ancestral sample of a complete instantiation, projected onto the leaves.
/// The result always has positive probability.
pub fn sample_evidence(net: &BayesianNetwork, rng: &mut impl Rng) -> Assignment {
    let mut values = vec![0usize; net.num_vars()];
    for &v in net.topological_order() {
        let cpt = net.cpt(v);
        let row = cpt.row(cpt.row_index(|p| values[p]));
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = None;
        for (x, &p) in row.iter().enumerate() {
            if p > 0.0 {
                pick = Some(x);
                acc += p;
                if u < acc {
                    break;
                }
            }
        }
        values[v] = pick.expect("rows have positive mass");
    }
    net.leaves().into_iter().map(|v| (v, values[v])).collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("connectivity {c} is outside the calibrated range 1..={max}")]
    Connectivity { c: usize, max: usize },
    #[error("edge probability {0} is outside [0, 1]")]
    EdgeProbability(f64),
    #[error("bias {0} is outside [0, 0.5]")]
    Bias(f64),
    #[error("a network needs at least one variable")]
    NoVariables,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum StructureMethod {
    Connectivity { c: usize },
    EdgeProb { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub structure: StructureMethod,
    pub nodes: usize,
    pub bias: f64,
    pub max_map_vars: usize,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.nodes == 0 {
            return Err(GenError::NoVariables);
        }
        if !(0.0..=0.5).contains(&self.bias) {
            return Err(GenError::Bias(self.bias));
        }
        match self.structure {
            StructureMethod::EdgeProb { p } if !(0.0..=1.0).contains(&p) => Err(GenError::EdgeProbability(p)),
            StructureMethod::Connectivity { c } if c == 0 || c > max_connectivity() => {
                Err(GenError::Connectivity { c, max: max_connectivity() })
            }
            _ => Ok(()),
        }
    }

    pub fn structure(&self, rng: &mut impl Rng) -> Result<Dag, GenError> {
        self.validate()?;
        match self.structure {
            StructureMethod::EdgeProb { p } => Ok(gen_structure_edge_prob(self.nodes, p, rng)),
            StructureMethod::Connectivity { c } => gen_structure_connectivity(self.nodes, c, rng),
        }
    }

    /// Structure, quantification, MAP variables and leaf evidence from one seed.
    pub fn generate(&self, seed: u64) -> Result<Instance, GenError> {
        let mut rng = rng_from_seed(seed);
        let dag = self.structure(&mut rng)?;
        Ok(Instance::from_structure(&dag, self.bias, self.max_map_vars, &mut rng))
    }
}

/// A quantified network with its MAP query.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub network: BayesianNetwork,
    pub map_vars: Vec<VarId>,
    /// Leaf evidence; leaves chosen as MAP variables are left unobserved.
    pub evidence: Assignment,
}

impl Instance {
    pub fn from_structure(dag: &Dag, bias: f64, max_map_vars: usize, rng: &mut impl Rng) -> Self {
        let network = quantify(dag, bias, rng);
        let map_vars = select_map_vars(&network, max_map_vars, rng);
        let mut evidence = sample_evidence(&network, rng);
        for &v in &map_vars {
            evidence.unbind(v);
        }
        Instance { network, map_vars, evidence }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elim::{min_fill_order, moral_graph};
    use crate::inference::probability_of_evidence;

    #[test]
    fn edge_probability_extremes() {
        let mut rng = rng_from_seed(1);
        let empty = gen_structure_edge_prob(10, 0.0, &mut rng);
        assert_eq!(empty.num_edges(), 0);
        assert_eq!(empty.roots().len(), 10);
        let full = gen_structure_edge_prob(10, 1.0, &mut rng);
        assert_eq!(full.num_edges(), 45);
        assert!((0..10).all(|i| full.parents(i) == (0..i).collect::<Vec<_>>()));
    }

    #[test]
    fn edge_count_matches_expectation() {
        // 0.025 * C(100, 2) = 123.75
        let total: usize = (0..200)
            .map(|s| gen_structure_edge_prob(100, 0.025, &mut rng_from_seed(derive_seed(7, s))).num_edges())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 123.75).abs() <= 12.375, "mean edges {mean}");
    }

    #[test]
    fn single_variable_structures() {
        let mut rng = rng_from_seed(3);
        assert_eq!(gen_structure_connectivity(1, 5, &mut rng).unwrap().roots(), vec![0]);
        assert_eq!(gen_structure_edge_prob(1, 0.5, &mut rng).roots(), vec![0]);
    }

    #[test]
    fn connectivity_one_is_a_forest() {
        let mut ok = 0;
        for s in 0..200 {
            let dag = gen_structure_connectivity(100, 1, &mut rng_from_seed(derive_seed(11, s))).unwrap();
            let g = moral_graph(&dag.skeleton());
            if order_width(&g, &min_fill_order(&g, None)) <= 2 {
                ok += 1;
            }
        }
        assert!(ok >= 190, "{ok}/200 had width <= 2");
    }

    #[test]
    fn calibration_table_is_complete() {
        let table = calibration_table();
        assert_eq!(table.iter().map(|e| e.c).collect::<Vec<_>>(), (1..=20).collect::<Vec<_>>());
        for e in table {
            assert!(e.median_width.abs_diff(e.c) <= 2, "{e:?}");
        }
        assert!(matches!(
            gen_structure_connectivity(10, 21, &mut rng_from_seed(0)),
            Err(GenError::Connectivity { c: 21, .. })
        ));
    }

    #[test]
    fn bias_bounds_entries() {
        let dag = gen_structure_edge_prob(40, 0.1, &mut rng_from_seed(5));
        let zero = quantify(&dag, 0.0, &mut rng_from_seed(6));
        let tenth = quantify(&dag, 0.1, &mut rng_from_seed(6));
        for v in 0..40 {
            if dag.parents(v).is_empty() {
                continue;
            }
            assert!(zero.cpt(v).table().iter().all(|&p| p == 0.0 || p == 1.0));
            assert!(tenth.cpt(v).table().iter().all(|&p| !(0.1..=0.9).contains(&p)));
        }
        for net in [&zero, &tenth] {
            for cpt in net.cpts() {
                for r in 0..cpt.num_rows() {
                    assert!((cpt.row(r).iter().sum::<f64>() - 1.0).abs() <= f64::EPSILON);
                }
            }
        }
    }

    #[test]
    fn map_var_selection() {
        let mut rng = rng_from_seed(9);
        let ten = quantify(&gen_structure_edge_prob(10, 0.0, &mut rng), 0.5, &mut rng);
        assert_eq!(select_map_vars(&ten, 25, &mut rng), (0..10).collect::<Vec<_>>());
        let forty = quantify(&gen_structure_edge_prob(40, 0.0, &mut rng), 0.5, &mut rng);
        let s = select_map_vars(&forty, 25, &mut rng);
        assert_eq!(s.len(), 25);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(select_map_vars(&forty, 0, &mut rng).is_empty());
    }

    #[test]
    fn evidence_is_on_leaves_and_possible() {
        for s in 0..200u64 {
            let mut rng = rng_from_seed(derive_seed(13, s));
            let dag = gen_structure_edge_prob(12, 0.3, &mut rng);
            let net = quantify(&dag, [0.0, 0.125, 0.5][s as usize % 3], &mut rng);
            let e = sample_evidence(&net, &mut rng);
            assert_eq!(e.vars().collect::<Vec<_>>(), net.leaves());
            let order = min_fill_order(&moral_graph(&net), None);
            assert!(!probability_of_evidence(&net, &e, &order).unwrap().is_zero());
        }
        // isolated variables are leaves too
        let net = quantify(&gen_structure_edge_prob(3, 0.0, &mut rng_from_seed(1)), 0.5, &mut rng_from_seed(2));
        assert_eq!(sample_evidence(&net, &mut rng_from_seed(3)).len(), 3);
    }

    #[test]
    fn generation_is_deterministic() {
        let config =
            GenConfig { structure: StructureMethod::Connectivity { c: 4 }, nodes: 30, bias: 0.25, max_map_vars: 25 };
        assert_eq!(config.generate(42).unwrap(), config.generate(42).unwrap());
        assert_ne!(config.generate(42).unwrap(), config.generate(43).unwrap());
        let bad = GenConfig { bias: 0.7, ..config };
        assert_eq!(bad.generate(1), Err(GenError::Bias(0.7)));
    }
}
