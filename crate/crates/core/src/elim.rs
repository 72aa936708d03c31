//! Interaction graphs, min-fill elimination orders and their widths.
//!
//! A constrained order eliminates every variable outside the constraint set
//! before any variable inside it, which is what sum-then-max elimination for
//! MAP requires.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::network::{BayesianNetwork, VarId};

/// Undirected, irreflexive graph over variable ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    adjacency: Vec<BTreeSet<VarId>>,
}

impl InteractionGraph {
    pub fn empty(num_vertices: usize) -> Self {
        InteractionGraph { adjacency: vec![BTreeSet::new(); num_vertices] }
    }

    pub fn from_edges(num_vertices: usize, edges: &[(VarId, VarId)]) -> Self {
        let mut g = Self::empty(num_vertices);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Adds `a - b`; self-loops are ignored.
    pub fn add_edge(&mut self, a: VarId, b: VarId) {
        if a != b {
            self.adjacency[a].insert(b);
            self.adjacency[b].insert(a);
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, a: VarId, b: VarId) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adjacency[v]
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.range(a + 1..).map(|&b| (a, b)));
        }
        out
    }
}

/// Connects each variable to its parents and marries co-parents.
pub fn moral_graph(net: &BayesianNetwork) -> InteractionGraph {
    let mut g = InteractionGraph::empty(net.num_vars());
    for v in 0..net.num_vars() {
        let parents = net.parents(v);
        for (i, &p) in parents.iter().enumerate() {
            g.add_edge(v, p);
            for &q in &parents[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("order is not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("variable {0} outside the constraint set follows a constrained variable")]
    ConstraintViolated(VarId),
    #[error("constraint mentions unknown variable {0}")]
    UnknownVariable(VarId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    sequence: Vec<VarId>,
    constraint: Option<BTreeSet<VarId>>,
}

impl EliminationOrder {
    /// Validates that `sequence` is a permutation and, when a constraint is
    /// given, that every unconstrained variable precedes every constrained one.
    pub fn new(sequence: Vec<VarId>, constraint: Option<BTreeSet<VarId>>) -> Result<Self, OrderError> {
        let n = sequence.len();
        let mut seen = vec![false; n];
        for &v in &sequence {
            if v >= n || seen[v] {
                return Err(OrderError::NotPermutation(n));
            }
            seen[v] = true;
        }
        if let Some(set) = &constraint {
            if let Some(&v) = set.iter().find(|&&v| v >= n) {
                return Err(OrderError::UnknownVariable(v));
            }
            let mut in_tail = false;
            for &v in &sequence {
                if set.contains(&v) {
                    in_tail = true;
                } else if in_tail {
                    return Err(OrderError::ConstraintViolated(v));
                }
            }
        }
        Ok(EliminationOrder { sequence, constraint })
    }

    pub fn sequence(&self) -> &[VarId] {
        &self.sequence
    }

    pub fn constraint(&self) -> Option<&BTreeSet<VarId>> {
        self.constraint.as_ref()
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// True when all variables outside `set` come before all variables in it.
    pub fn eliminates_first_outside(&self, set: &BTreeSet<VarId>) -> bool {
        let first_inside = self.sequence.iter().position(|v| set.contains(v)).unwrap_or(self.len());
        self.sequence[first_inside..].iter().all(|v| set.contains(v))
    }
}

/// Working copy of a graph that supports vertex elimination with fill-in.
struct Elimination {
    adjacency: Vec<BTreeSet<VarId>>,
}

impl Elimination {
    fn new(g: &InteractionGraph) -> Self {
        Elimination { adjacency: g.adjacency.clone() }
    }

    fn fill_in(&self, v: VarId) -> usize {
        let nbrs: Vec<VarId> = self.adjacency[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nbrs.iter().enumerate() {
            let adj_a = &self.adjacency[a];
            missing += nbrs[i + 1..].iter().filter(|b| !adj_a.contains(b)).count();
        }
        missing
    }

    /// Connects the neighbors of `v` pairwise, removes `v`, and returns its degree.
    fn eliminate(&mut self, v: VarId) -> usize {
        let nbrs: Vec<VarId> = std::mem::take(&mut self.adjacency[v]).into_iter().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            self.adjacency[a].remove(&v);
            for &b in &nbrs[i + 1..] {
                self.adjacency[a].insert(b);
                self.adjacency[b].insert(a);
            }
        }
        nbrs.len()
    }
}

/// Greedy min-fill order, lowest id on ties. With a constraint set, min-fill
/// runs to exhaustion over the unconstrained vertices and then over the set.
pub fn min_fill_order(g: &InteractionGraph, constraint: Option<&BTreeSet<VarId>>) -> EliminationOrder {
    let n = g.num_vertices();
    let mut work = Elimination::new(g);
    let mut sequence = Vec::with_capacity(n);
    let phases: Vec<Vec<VarId>> = match constraint {
        None => vec![(0..n).collect()],
        Some(set) => vec![(0..n).filter(|v| !set.contains(v)).collect(), (0..n).filter(|v| set.contains(v)).collect()],
    };
    for mut remaining in phases {
        while !remaining.is_empty() {
            let (pos, _) = remaining
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, work.fill_in(v)))
                .min_by_key(|&(i, fill)| (fill, remaining[i]))
                .expect("nonempty");
            let v = remaining.remove(pos);
            work.eliminate(v);
            sequence.push(v);
        }
    }
    EliminationOrder::new(sequence, constraint.cloned()).expect("min-fill yields a valid order")
}

/// Width of `order` on `g`: the largest number of not-yet-eliminated
/// neighbors any vertex has when it is eliminated.
pub fn order_width(g: &InteractionGraph, order: &EliminationOrder) -> usize {
    assert_eq!(order.len(), g.num_vertices(), "order must cover the graph");
    let mut work = Elimination::new(g);
    order.sequence().iter().map(|&v| work.eliminate(v)).max().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthStats {
    pub min: usize,
    pub max: usize,
    pub average: f64,
    /// `log2(mean(2^w))`.
    pub weighted_average: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("width statistics need at least one width")]
pub struct EmptyWidths;

pub fn width_stats(widths: &[usize]) -> Result<WidthStats, EmptyWidths> {
    let min = *widths.iter().min().ok_or(EmptyWidths)?;
    let max = *widths.iter().max().ok_or(EmptyWidths)?;
    let k = widths.len() as f64;
    let average = widths.iter().sum::<usize>() as f64 / k;
    // factor out 2^max so the sum cannot overflow
    let scaled: f64 = widths.iter().map(|&w| (-((max - w) as f64)).exp2()).sum();
    let weighted_average = max as f64 + (scaled / k).log2();
    Ok(WidthStats { min, max, average, weighted_average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;

    /// A is the parent of both B and C.
    fn fork() -> InteractionGraph {
        InteractionGraph::from_edges(3, &[(0, 1), (0, 2)])
    }

    fn order(seq: &[VarId]) -> EliminationOrder {
        EliminationOrder::new(seq.to_vec(), None).unwrap()
    }

    #[test]
    fn moralizes_networks() {
        let binary = |b: &mut NetworkBuilder, v, parents: &[VarId]| {
            b.cpt(v, parents, [0.5, 0.5].repeat(1 << parents.len()));
        };
        let mut b = NetworkBuilder::new();
        let (a, bb, c) = (b.variable("A", 2), b.variable("B", 2), b.variable("C", 2));
        binary(&mut b, a, &[]);
        binary(&mut b, bb, &[a]);
        binary(&mut b, c, &[a]);
        assert_eq!(moral_graph(&b.build().unwrap()).edges(), vec![(0, 1), (0, 2)]);

        let mut b = NetworkBuilder::new();
        let (a, bb, c) = (b.variable("A", 2), b.variable("B", 2), b.variable("C", 2));
        binary(&mut b, a, &[]);
        binary(&mut b, bb, &[a]);
        binary(&mut b, c, &[bb]);
        assert_eq!(moral_graph(&b.build().unwrap()).edges(), vec![(0, 1), (1, 2)]);

        let mut b = NetworkBuilder::new();
        let (a, bb, c) = (b.variable("A", 2), b.variable("B", 2), b.variable("C", 2));
        binary(&mut b, a, &[]);
        binary(&mut b, bb, &[]);
        binary(&mut b, c, &[a, bb]);
        assert_eq!(moral_graph(&b.build().unwrap()).edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn fork_order_widths() {
        let g = fork();
        let (a, b, c) = (0, 1, 2);
        let table = [([a, b, c], 2), ([a, c, b], 2), ([b, a, c], 1), ([b, c, a], 1), ([c, a, b], 1), ([c, b, a], 1)];
        for (seq, width) in table {
            assert_eq!(order_width(&g, &order(&seq)), width, "{seq:?}");
        }
    }

    #[test]
    fn fork_min_fill() {
        let g = fork();
        let free = min_fill_order(&g, None);
        assert_eq!(order_width(&g, &free), 1);
        assert_ne!(free.sequence()[0], 0);

        let s: BTreeSet<VarId> = [1, 2].into();
        let constrained = min_fill_order(&g, Some(&s));
        assert_eq!(constrained.sequence()[0], 0);
        assert_eq!(order_width(&g, &constrained), 2);
        assert!(constrained.eliminates_first_outside(&s));
    }

    #[test]
    fn edgeless_and_single_vertex() {
        let g = InteractionGraph::empty(5);
        let s: BTreeSet<VarId> = [3].into();
        assert_eq!(order_width(&g, &min_fill_order(&g, None)), 0);
        assert_eq!(order_width(&g, &min_fill_order(&g, Some(&s))), 0);
        assert_eq!(order_width(&InteractionGraph::empty(1), &order(&[0])), 0);
    }

    #[test]
    fn order_validation() {
        assert_eq!(EliminationOrder::new(vec![0, 0], None), Err(OrderError::NotPermutation(2)));
        assert_eq!(EliminationOrder::new(vec![0, 2], None), Err(OrderError::NotPermutation(2)));
        let s: BTreeSet<VarId> = [0].into();
        assert_eq!(EliminationOrder::new(vec![0, 1], Some(s.clone())), Err(OrderError::ConstraintViolated(1)));
        assert!(EliminationOrder::new(vec![1, 0], Some(s)).is_ok());
    }

    #[test]
    fn width_statistics() {
        let s = width_stats(&[13, 13, 13]).unwrap();
        assert_eq!((s.min, s.max, s.average, s.weighted_average), (13, 13, 13.0, 13.0));

        // direct evaluation: mean 4/3, log2((2 + 2 + 4) / 3) = log2(8/3)
        let s = width_stats(&[1, 1, 2]).unwrap();
        assert!((s.average - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.weighted_average - (8.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!((s.weighted_average - 1.415037).abs() < 1e-6);

        // log2((2^10 + 2^30) / 2) = 29 + log2(1 + 2^-20)
        let s = width_stats(&[10, 30]).unwrap();
        assert!((s.weighted_average - (29.0 + (1.0 + 2f64.powi(-20)).log2())).abs() < 1e-12);
        assert!((s.weighted_average - 29.0000014).abs() < 1e-7);

        // far beyond f64 range without the factoring
        let s = width_stats(&[2000, 2000]).unwrap();
        assert_eq!(s.weighted_average, 2000.0);

        assert_eq!(width_stats(&[]), Err(EmptyWidths));
    }
}
