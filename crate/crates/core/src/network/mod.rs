//! Discrete Bayesian networks: variables, conditional probability tables,
//! validation, and partial/complete assignments.
//!
//! CPT tables are stored row-major over parent configurations with the parents
//! ordered by ascending variable id and the last parent varying fastest. Within
//! a row the child's values are contiguous, so the entry for child value `x`
//! under parent configuration index `r` lives at `r * card(child) + x`.

mod assignment;
mod format;

pub use assignment::{neighbor, Assignment, AssignmentError};
pub(crate) use format::syntax_error;
pub use format::{parse_network, serialize_network, CptDecl, NetworkFile, VariableDecl};

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Dense 0-based variable index.
pub type VarId = usize;

/// Absolute tolerance on CPT row sums.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("variable `{name}`: cardinality {cardinality} < 2")]
    Cardinality { name: String, cardinality: u64 },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` has no CPT")]
    MissingCpt(String),
    #[error("variable `{0}` has more than one CPT")]
    DuplicateCpt(String),
    #[error("CPT of `{child}`: duplicate parent `{parent}`")]
    DuplicateParent { child: String, parent: String },
    #[error("CPT of `{0}` lists the child as its own parent")]
    SelfParent(String),
    #[error("CPT of `{child}`: expected {expected} entries, found {found}")]
    TableSize { child: String, expected: usize, found: usize },
    #[error("CPT of `{child}`: entry {index} = {value} is outside [0, 1]")]
    OutOfRange { child: String, index: usize, value: f64 },
    #[error("CPT of `{child}`: row {row} sums to {sum}, not 1")]
    NotNormalized { child: String, row: usize, sum: f64 },
    #[error("cycle detected through `{0}`")]
    Cycle(String),
}

/// Conditional distribution of one child given its parents.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    parent_cards: Vec<usize>,
    child_card: usize,
    table: Vec<f64>,
}

impl Cpt {
    pub fn child(&self) -> VarId {
        self.child
    }

    /// Parents in ascending id order.
    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn num_rows(&self) -> usize {
        self.table.len() / self.child_card
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.table[row * self.child_card..(row + 1) * self.child_card]
    }

    /// Row index of the parent configuration read from `value_of`.
    pub fn row_index(&self, mut value_of: impl FnMut(VarId) -> usize) -> usize {
        self.parents.iter().zip(&self.parent_cards).fold(0, |acc, (&p, &card)| acc * card + value_of(p))
    }

    /// `Pr(child = value | parents)` with parent values read from `value_of`.
    pub fn prob(&self, value: usize, value_of: impl FnMut(VarId) -> usize) -> f64 {
        self.table[self.row_index(value_of) * self.child_card + value]
    }
}

/// A validated network. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    children: Vec<Vec<VarId>>,
    topological: Vec<VarId>,
}

/// Incremental construction of a [`BayesianNetwork`].
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    variables: Vec<(String, usize)>,
    cpts: Vec<(VarId, Vec<VarId>, Vec<f64>)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable and returns its id.
    pub fn variable(&mut self, name: impl Into<String>, cardinality: usize) -> VarId {
        self.variables.push((name.into(), cardinality));
        self.variables.len() - 1
    }

    /// Adds the CPT of `child`. `parents` may be listed in any order; `table`
    /// is laid out over the parents in the order given here.
    pub fn cpt(&mut self, child: VarId, parents: &[VarId], table: Vec<f64>) -> &mut Self {
        self.cpts.push((child, parents.to_vec(), table));
        self
    }

    pub fn build(self) -> Result<BayesianNetwork, NetworkError> {
        let mut variables = Vec::with_capacity(self.variables.len());
        for (id, (name, cardinality)) in self.variables.into_iter().enumerate() {
            if cardinality < 2 {
                return Err(NetworkError::Cardinality { name, cardinality: cardinality as u64 });
            }
            if variables.iter().any(|v: &Variable| v.name == name) {
                return Err(NetworkError::DuplicateName(name));
            }
            variables.push(Variable { id, name, cardinality });
        }
        let name_of = |id: VarId| variables.get(id).map(|v| v.name.clone()).unwrap_or_else(|| format!("#{id}"));

        let mut slots: Vec<Option<Cpt>> = vec![None; variables.len()];
        for (child, parents, table) in self.cpts {
            let Some(child_var) = variables.get(child) else {
                return Err(NetworkError::UnknownVariable(name_of(child)));
            };
            if slots[child].is_some() {
                return Err(NetworkError::DuplicateCpt(child_var.name.clone()));
            }
            for (i, &p) in parents.iter().enumerate() {
                if p >= variables.len() {
                    return Err(NetworkError::UnknownVariable(name_of(p)));
                }
                if p == child {
                    return Err(NetworkError::SelfParent(child_var.name.clone()));
                }
                if parents[..i].contains(&p) {
                    return Err(NetworkError::DuplicateParent {
                        child: child_var.name.clone(),
                        parent: variables[p].name.clone(),
                    });
                }
            }
            let cards: Vec<usize> = parents.iter().map(|&p| variables[p].cardinality).collect();
            let child_card = child_var.cardinality;
            let expected = cards.iter().product::<usize>() * child_card;
            if table.len() != expected {
                return Err(NetworkError::TableSize { child: child_var.name.clone(), expected, found: table.len() });
            }
            if let Some((index, &value)) = table.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(NetworkError::OutOfRange { child: child_var.name.clone(), index, value });
            }
            for (row, chunk) in table.chunks(child_card).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(NetworkError::NotNormalized { child: child_var.name.clone(), row, sum });
                }
            }
            let (parents, parent_cards, table) = canonical_layout(&parents, &cards, child_card, table);
            slots[child] = Some(Cpt { child, parents, parent_cards, child_card, table });
        }

        let mut cpts = Vec::with_capacity(slots.len());
        for (id, slot) in slots.into_iter().enumerate() {
            cpts.push(slot.ok_or_else(|| NetworkError::MissingCpt(variables[id].name.clone()))?);
        }

        let mut children = vec![Vec::new(); variables.len()];
        for cpt in &cpts {
            for &p in &cpt.parents {
                children[p].push(cpt.child);
            }
        }
        let topological =
            topological_order(&cpts, &children).map_err(|v| NetworkError::Cycle(variables[v].name.clone()))?;

        Ok(BayesianNetwork { variables, cpts, children, topological })
    }
}

/// Reorders a table laid out over `parents` (as listed) into ascending parent id order.
fn canonical_layout(
    parents: &[VarId],
    cards: &[usize],
    child_card: usize,
    table: Vec<f64>,
) -> (Vec<VarId>, Vec<usize>, Vec<f64>) {
    let mut perm: Vec<usize> = (0..parents.len()).collect();
    perm.sort_by_key(|&i| parents[i]);
    let sorted_parents: Vec<VarId> = perm.iter().map(|&i| parents[i]).collect();
    let sorted_cards: Vec<usize> = perm.iter().map(|&i| cards[i]).collect();
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return (sorted_parents, sorted_cards, table);
    }

    // strides of each listed parent in the source layout
    let mut strides = vec![0; parents.len()];
    let mut acc = 1;
    for i in (0..parents.len()).rev() {
        strides[i] = acc;
        acc *= cards[i];
    }
    let rows = acc;
    let mut out = vec![0.0; table.len()];
    let mut digits = vec![0usize; parents.len()];
    for row in 0..rows {
        let src_row: usize = digits.iter().zip(&perm).map(|(&d, &i)| d * strides[i]).sum();
        out[row * child_card..(row + 1) * child_card]
            .copy_from_slice(&table[src_row * child_card..(src_row + 1) * child_card]);
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < sorted_cards[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    (sorted_parents, sorted_cards, out)
}

/// Kahn's algorithm, lowest id first. On a cycle returns a variable on or behind it.
fn topological_order(cpts: &[Cpt], children: &[Vec<VarId>]) -> Result<Vec<VarId>, VarId> {
    let n = cpts.len();
    let mut indegree: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
    let mut ready: BinaryHeap<Reverse<VarId>> = (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&v| indegree[v] > 0).expect("cycle leaves a positive indegree"))
    }
}

impl BayesianNetwork {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id].cardinality
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.cardinality).collect()
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.cpts[id].parents
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id]
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.topological
    }

    pub fn roots(&self) -> Vec<VarId> {
        (0..self.num_vars()).filter(|&v| self.parents(v).is_empty()).collect()
    }

    /// Childless variables.
    pub fn leaves(&self) -> Vec<VarId> {
        (0..self.num_vars()).filter(|&v| self.children[v].is_empty()).collect()
    }

    /// Product of the CPT entries selected by a complete assignment.
    pub fn joint_probability(&self, complete: &Assignment) -> f64 {
        let value = |v: VarId| complete.get(v).expect("assignment must be complete");
        self.cpts.iter().map(|cpt| cpt.prob(value(cpt.child), value)).product()
    }
}
