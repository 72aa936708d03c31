//! Nonnegative factor tables over sorted variable scopes.
//!
//! A factor represents `values[i] * 2^log_offset`. After every product and
//! marginalization the table is rescaled by an exact power of two so that its
//! largest entry lies in `[0.5, 1)`, which keeps long products away from the
//! subnormal range without perturbing any mantissa bits.

use crate::network::{Assignment, BayesianNetwork, Cpt, VarId};
use crate::prob::ScaledProb;

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    log_offset: i64,
}

/// For each maxed-out configuration of the remaining scope, the index of the
/// eliminated variable's value that attained the maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgmaxTable {
    pub var: VarId,
    pub scope: Vec<VarId>,
    pub cards: Vec<usize>,
    pub argmax: Vec<usize>,
}

impl ArgmaxTable {
    /// Looks up the recorded argmax given values for the table's scope.
    pub fn lookup(&self, values: &Assignment) -> usize {
        let idx = self
            .scope
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&v, &c)| acc * c + values.get(v).expect("traceback visits scope variables first"));
        self.argmax[idx]
    }
}

/// Row-major index helper: iterates configurations of `cards`, last fastest.
fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    let mut acc = 1;
    for i in (0..cards.len()).rev() {
        out[i] = acc;
        acc *= cards[i];
    }
    out
}

impl Factor {
    /// The constant factor 1 with an empty scope.
    pub fn unit() -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![1.0], log_offset: 0 }
    }

    /// Builds a factor; `scope` must be strictly ascending.
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(values.len(), cards.iter().product::<usize>());
        let mut f = Factor { scope, cards, values, log_offset: 0 };
        f.rescale();
        f
    }

    /// The CPT of one variable as a factor over `parents ∪ {child}`.
    pub fn from_cpt(net: &BayesianNetwork, cpt: &Cpt) -> Self {
        let child = cpt.child();
        let mut scope: Vec<VarId> = cpt.parents().to_vec();
        let insert_at = scope.partition_point(|&p| p < child);
        scope.insert(insert_at, child);
        let cards: Vec<usize> = scope.iter().map(|&v| net.cardinality(v)).collect();
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0usize; scope.len()];
        for _ in 0..total {
            let value_of = |v: VarId| digits[scope.binary_search(&v).expect("in scope")];
            values.push(cpt.prob(value_of(child), value_of));
            increment(&mut digits, &cards);
        }
        Factor::new(scope, cards, values)
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_offset(&self) -> i64 {
        self.log_offset
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.scope.binary_search(&var).is_ok()
    }

    /// Entry `i` with the offset applied.
    pub fn entry(&self, i: usize) -> ScaledProb {
        ScaledProb::from_parts(self.values[i], self.log_offset)
    }

    /// The single entry of a scalar factor.
    pub fn scalar(&self) -> ScaledProb {
        debug_assert!(self.scope.is_empty());
        self.entry(0)
    }

    fn rescale(&mut self) {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return;
        }
        let (_, e) = libm::frexp(max);
        if e != 0 {
            for v in &mut self.values {
                *v = libm::ldexp(*v, -e);
            }
            self.log_offset += e as i64;
        }
    }

    /// Restriction to the bindings of `evidence`; bound variables leave the scope.
    pub fn reduce(&self, evidence: &Assignment) -> Factor {
        if !self.scope.iter().any(|&v| evidence.contains(v)) {
            return self.clone();
        }
        let src_strides = strides(&self.cards);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut kept_strides = Vec::new();
        for (i, &v) in self.scope.iter().enumerate() {
            match evidence.get(v) {
                Some(x) => base += x * src_strides[i],
                None => {
                    scope.push(v);
                    cards.push(self.cards[i]);
                    kept_strides.push(src_strides[i]);
                }
            }
        }
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0usize; scope.len()];
        for _ in 0..total {
            let idx = base + digits.iter().zip(&kept_strides).map(|(d, s)| d * s).sum::<usize>();
            values.push(self.values[idx]);
            increment(&mut digits, &cards);
        }
        let mut f = Factor { scope, cards, values, log_offset: self.log_offset };
        f.rescale();
        f
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = Vec::with_capacity(self.scope.len() + other.scope.len());
        let mut cards = Vec::with_capacity(scope.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.scope.len() || j < other.scope.len() {
            let take_left = j == other.scope.len() || (i < self.scope.len() && self.scope[i] <= other.scope[j]);
            if take_left {
                if j < other.scope.len() && self.scope[i] == other.scope[j] {
                    j += 1;
                }
                scope.push(self.scope[i]);
                cards.push(self.cards[i]);
                i += 1;
            } else {
                scope.push(other.scope[j]);
                cards.push(other.cards[j]);
                j += 1;
            }
        }
        let left = projected_strides(&scope, &self.scope, &self.cards);
        let right = projected_strides(&scope, &other.scope, &other.cards);
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0usize; scope.len()];
        let (mut li, mut ri) = (0usize, 0usize);
        for _ in 0..total {
            values.push(self.values[li] * other.values[ri]);
            // odometer step, updating both source indices incrementally
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                li += left[k];
                ri += right[k];
                if digits[k] < cards[k] {
                    break;
                }
                li -= left[k] * cards[k];
                ri -= right[k] * cards[k];
                digits[k] = 0;
            }
        }
        let mut f = Factor { scope, cards, values, log_offset: self.log_offset + other.log_offset };
        f.rescale();
        f
    }

    fn fold_out(&self, var: VarId, mut fold: impl FnMut(&[f64], usize) -> f64) -> (Factor, Vec<usize>) {
        let pos = self.scope.binary_search(&var).expect("variable in scope");
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = Vec::with_capacity(outer * inner);
        let mut argmax = Vec::with_capacity(outer * inner);
        let mut column = vec![0.0; card];
        for o in 0..outer {
            for i in 0..inner {
                for (x, slot) in column.iter_mut().enumerate() {
                    *slot = self.values[(o * card + x) * inner + i];
                }
                values.push(fold(&column, argmax.len()));
                argmax.push(best_index(&column));
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let mut f = Factor { scope, cards, values, log_offset: self.log_offset };
        f.rescale();
        (f, argmax)
    }

    pub fn sum_out(&self, var: VarId) -> Factor {
        self.fold_out(var, |col, _| col.iter().sum()).0
    }

    /// Maximizes `var` out, recording the lowest maximizing value per row.
    pub fn max_out(&self, var: VarId) -> (Factor, ArgmaxTable) {
        let (f, argmax) = self.fold_out(var, |col, _| col.iter().copied().fold(0.0, f64::max));
        let table = ArgmaxTable { var, scope: f.scope.clone(), cards: f.cards.clone(), argmax };
        (f, table)
    }
}

/// Lowest index attaining the maximum.
fn best_index(column: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in column.iter().enumerate().skip(1) {
        if v > column[best] {
            best = i;
        }
    }
    best
}

/// Strides of a sub-scope's layout, expressed per position of `scope` (0 when absent).
fn projected_strides(scope: &[VarId], sub: &[VarId], sub_cards: &[usize]) -> Vec<usize> {
    let sub_strides = strides(sub_cards);
    scope.iter().map(|v| sub.binary_search(v).map(|i| sub_strides[i]).unwrap_or(0)).collect()
}

pub(crate) fn increment(digits: &mut [usize], cards: &[usize]) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < cards[k] {
            return;
        }
        digits[k] = 0;
    }
}
