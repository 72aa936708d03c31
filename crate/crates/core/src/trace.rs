//! The network polynomial as a recorded variable-elimination trace.
//!
//! Running sum-product elimination symbolically, with one indicator leaf per
//! (variable, value) multiplied into that variable's CPT, yields a DAG of `+`
//! and `×` nodes whose value under an indicator setting is the probability of
//! the evidence that setting encodes. The DAG has size proportional to the
//! tables elimination would build, i.e. `O(n · 2^w)` for an order of width `w`.
//!
//! Because the polynomial is multilinear, its partial derivative with respect
//! to the indicator of `X = x`, taken at the setting for `(s, e)`, is
//! `Pr(s - X, x, e)`. One forward pass and one reverse pass therefore score
//! every single-variable change of `s` at once. The trace depends only on the
//! network and the order; evidence and search states are just leaf values.
//!
//! All node values and adjoints are [`ScaledProb`]s so that neither pass
//! underflows on large networks.

use crate::elim::EliminationOrder;
use crate::network::{Assignment, BayesianNetwork, VarId};
use crate::prob::ScaledProb;

/// One 0/1 value per (variable, value) indicator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorSetting {
    offsets: Vec<usize>,
    on: Vec<bool>,
}

impl IndicatorSetting {
    /// Every indicator at 1: no evidence.
    pub fn all_on(net: &BayesianNetwork) -> Self {
        let mut offsets = Vec::with_capacity(net.num_vars() + 1);
        let mut total = 0;
        for v in net.variables() {
            offsets.push(total);
            total += v.cardinality;
        }
        offsets.push(total);
        IndicatorSetting { offsets, on: vec![true; total] }
    }

    /// Bound variables get a single 1 at their value; unbound ones all 1s.
    pub fn from_assignment(net: &BayesianNetwork, assignment: &Assignment) -> Self {
        let mut setting = Self::all_on(net);
        for (var, value) in assignment.iter() {
            setting.bind(var, value);
        }
        setting
    }

    pub fn get(&self, var: VarId, value: usize) -> bool {
        self.on[self.offsets[var] + value]
    }

    pub fn set(&mut self, var: VarId, value: usize, on: bool) {
        self.on[self.offsets[var] + value] = on;
    }

    pub fn bind(&mut self, var: VarId, value: usize) {
        for (i, slot) in self.on[self.offsets[var]..self.offsets[var + 1]].iter_mut().enumerate() {
            *slot = i == value;
        }
    }

    pub fn unbind(&mut self, var: VarId) {
        self.on[self.offsets[var]..self.offsets[var + 1]].fill(true);
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Const(ScaledProb),
    /// Flat indicator index.
    Indicator(u32),
    Mul(u32, u32),
    /// Children are `children[start..start + len]`.
    Sum {
        start: u32,
        len: u32,
    },
}

/// Per-evaluation scratch space. One per concurrent search.
#[derive(Clone, Debug, Default)]
pub struct TraceBuffers {
    value: Vec<ScaledProb>,
    adjoint: Vec<ScaledProb>,
}

/// The recorded trace. Immutable and shareable once built.
#[derive(Clone, Debug)]
pub struct Trace {
    nodes: Vec<Node>,
    children: Vec<u32>,
    root: u32,
    offsets: Vec<usize>,
    indicator_nodes: Vec<u32>,
    width: usize,
}

struct SymbolicFactor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    entries: Vec<u32>,
}

struct Recorder {
    nodes: Vec<Node>,
    children: Vec<u32>,
    width: usize,
}

impl Recorder {
    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn product(&mut self, a: &SymbolicFactor, b: &SymbolicFactor) -> SymbolicFactor {
        let mut scope: Vec<VarId> = a.scope.iter().chain(&b.scope).copied().collect();
        scope.sort_unstable();
        scope.dedup();
        let card_of = |v: VarId| {
            a.scope
                .iter()
                .position(|&u| u == v)
                .map(|i| a.cards[i])
                .or_else(|| b.scope.iter().position(|&u| u == v).map(|i| b.cards[i]))
                .expect("variable in one operand")
        };
        let cards: Vec<usize> = scope.iter().map(|&v| card_of(v)).collect();
        self.width = self.width.max(scope.len().saturating_sub(1));
        let sa = sub_strides(&scope, a);
        let sb = sub_strides(&scope, b);
        let total: usize = cards.iter().product();
        let mut entries = Vec::with_capacity(total);
        let mut digits = vec![0usize; scope.len()];
        for _ in 0..total {
            let ia: usize = digits.iter().zip(&sa).map(|(d, s)| d * s).sum();
            let ib: usize = digits.iter().zip(&sb).map(|(d, s)| d * s).sum();
            entries.push(self.push(Node::Mul(a.entries[ia], b.entries[ib])));
            crate::factor::increment(&mut digits, &cards);
        }
        SymbolicFactor { scope, cards, entries }
    }

    fn sum_out(&mut self, f: &SymbolicFactor, var: VarId) -> SymbolicFactor {
        let pos = f.scope.iter().position(|&v| v == var).expect("variable in scope");
        let card = f.cards[pos];
        let inner: usize = f.cards[pos + 1..].iter().product();
        let outer: usize = f.cards[..pos].iter().product();
        let mut entries = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let start = self.children.len() as u32;
                for x in 0..card {
                    self.children.push(f.entries[(o * card + x) * inner + i]);
                }
                entries.push(self.push(Node::Sum { start, len: card as u32 }));
            }
        }
        let mut scope = f.scope.clone();
        let mut cards = f.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        SymbolicFactor { scope, cards, entries }
    }
}

fn sub_strides(scope: &[VarId], f: &SymbolicFactor) -> Vec<usize> {
    let mut own = vec![0; f.scope.len()];
    let mut acc = 1;
    for i in (0..f.scope.len()).rev() {
        own[i] = acc;
        acc *= f.cards[i];
    }
    scope.iter().map(|v| f.scope.iter().position(|u| u == v).map(|i| own[i]).unwrap_or(0)).collect()
}

impl Trace {
    /// Records sum-product elimination of every variable along `order`.
    pub fn build(net: &BayesianNetwork, order: &EliminationOrder) -> Trace {
        assert_eq!(order.len(), net.num_vars(), "order must cover the network");
        let mut rec = Recorder { nodes: Vec::new(), children: Vec::new(), width: 0 };
        let setting = IndicatorSetting::all_on(net);
        let offsets = setting.offsets.clone();
        let mut indicator_nodes = Vec::with_capacity(*offsets.last().unwrap_or(&0));
        for v in net.variables() {
            for x in 0..v.cardinality {
                indicator_nodes.push(rec.push(Node::Indicator((offsets[v.id] + x) as u32)));
            }
        }

        let mut factors: Vec<SymbolicFactor> = Vec::with_capacity(net.num_vars());
        for cpt in net.cpts() {
            let child = cpt.child();
            let cpt_factor = crate::factor::Factor::from_cpt(net, cpt);
            // constants straight from the CPT, in the factor's sorted layout
            let scale = crate::prob::pow2(cpt_factor.log_offset());
            let entries =
                cpt_factor.values().iter().map(|&v| rec.push(Node::Const(ScaledProb::from_f64(v * scale)))).collect();
            let theta = SymbolicFactor {
                scope: cpt_factor.scope().to_vec(),
                cards: cpt_factor.scope().iter().map(|&v| net.cardinality(v)).collect(),
                entries,
            };
            let lambda = SymbolicFactor {
                scope: vec![child],
                cards: vec![net.cardinality(child)],
                entries: indicator_nodes[offsets[child]..offsets[child + 1]].to_vec(),
            };
            factors.push(rec.product(&theta, &lambda));
        }

        for &var in order.sequence() {
            let (bucket, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.scope.contains(&var));
            factors = rest;
            let mut iter = bucket.into_iter();
            let first = iter.next().expect("every variable appears in its own CPT");
            let product = iter.fold(first, |acc, f| rec.product(&acc, &f));
            factors.push(rec.sum_out(&product, var));
        }

        let mut iter = factors.into_iter();
        let first = iter.next().expect("at least one variable");
        let root = iter.fold(first, |acc, f| rec.product(&acc, &f));
        debug_assert!(root.scope.is_empty());
        Trace {
            root: root.entries[0],
            nodes: rec.nodes,
            children: rec.children,
            offsets,
            indicator_nodes,
            width: rec.width,
        }
    }

    /// Number of arithmetic and leaf nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Largest factor scope created while recording, minus one.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn buffers(&self) -> TraceBuffers {
        TraceBuffers {
            value: vec![ScaledProb::ZERO; self.nodes.len()],
            adjoint: vec![ScaledProb::ZERO; self.nodes.len()],
        }
    }

    fn ensure(&self, buf: &mut TraceBuffers) {
        if buf.value.len() != self.nodes.len() {
            *buf = self.buffers();
        }
    }

    /// Forward pass: `P` under `setting`.
    pub fn evaluate_with(&self, setting: &IndicatorSetting, buf: &mut TraceBuffers) -> ScaledProb {
        debug_assert_eq!(setting.offsets, self.offsets);
        self.ensure(buf);
        let value = &mut buf.value;
        for (i, node) in self.nodes.iter().enumerate() {
            value[i] = match *node {
                Node::Const(c) => c,
                Node::Indicator(k) => {
                    if setting.on[k as usize] {
                        ScaledProb::ONE
                    } else {
                        ScaledProb::ZERO
                    }
                }
                Node::Mul(a, b) => value[a as usize] * value[b as usize],
                Node::Sum { start, len } => self.children[start as usize..(start + len) as usize]
                    .iter()
                    .fold(ScaledProb::ZERO, |acc, &c| acc + value[c as usize]),
            };
        }
        value[self.root as usize]
    }

    pub fn evaluate(&self, setting: &IndicatorSetting) -> ScaledProb {
        self.evaluate_with(setting, &mut self.buffers())
    }

    /// Forward pass followed by reverse-mode differentiation. Afterwards
    /// [`Trace::partial`] reads `∂P/∂λ` for any indicator.
    pub fn differentiate(&self, setting: &IndicatorSetting, buf: &mut TraceBuffers) -> ScaledProb {
        let p = self.evaluate_with(setting, buf);
        let TraceBuffers { value, adjoint } = buf;
        adjoint.fill(ScaledProb::ZERO);
        adjoint[self.root as usize] = ScaledProb::ONE;
        for i in (0..self.nodes.len()).rev() {
            let a = adjoint[i];
            if a.is_zero() {
                continue;
            }
            match self.nodes[i] {
                Node::Mul(x, y) => {
                    let (x, y) = (x as usize, y as usize);
                    adjoint[x] = adjoint[x] + a * value[y];
                    adjoint[y] = adjoint[y] + a * value[x];
                }
                Node::Sum { start, len } => {
                    for &c in &self.children[start as usize..(start + len) as usize] {
                        adjoint[c as usize] = adjoint[c as usize] + a;
                    }
                }
                Node::Const(_) | Node::Indicator(_) => {}
            }
        }
        p
    }

    /// `∂P/∂λ_{var=value}` from the last [`Trace::differentiate`] call.
    pub fn partial(&self, buf: &TraceBuffers, var: VarId, value: usize) -> ScaledProb {
        buf.adjoint[self.indicator_nodes[self.offsets[var] + value] as usize]
    }
}

/// `P` under an indicator setting.
pub fn evaluate_polynomial(trace: &Trace, setting: &IndicatorSetting) -> ScaledProb {
    trace.evaluate(setting)
}

/// Scores of every single-variable change of a MAP state.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborScores {
    /// `Pr(s, e)`.
    pub base: ScaledProb,
    /// `scores[i][x] = Pr(s - X_i, x, e)` for the i-th MAP variable.
    pub scores: Vec<Vec<ScaledProb>>,
}

/// One forward and one reverse pass over `trace` at the indicators of
/// `(s, e)`, returning `Pr(s - X, x, e)` for every MAP variable `X` and value `x`.
pub fn all_neighbor_scores(
    trace: &Trace,
    net: &BayesianNetwork,
    map_vars: &[VarId],
    state: &Assignment,
    evidence: &Assignment,
    buf: &mut TraceBuffers,
) -> NeighborScores {
    let mut setting = IndicatorSetting::from_assignment(net, evidence);
    for (var, value) in state.iter() {
        setting.bind(var, value);
    }
    neighbor_scores_for(trace, net, map_vars, &setting, buf)
}

/// As [`all_neighbor_scores`], with the indicator setting prepared by the caller.
pub fn neighbor_scores_for(
    trace: &Trace,
    net: &BayesianNetwork,
    map_vars: &[VarId],
    setting: &IndicatorSetting,
    buf: &mut TraceBuffers,
) -> NeighborScores {
    let base = trace.differentiate(setting, buf);
    let scores =
        map_vars.iter().map(|&v| (0..net.cardinality(v)).map(|x| trace.partial(buf, v, x)).collect()).collect();
    NeighborScores { base, scores }
}
