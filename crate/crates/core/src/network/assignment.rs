use std::collections::BTreeMap;

use thiserror::Error;

use super::{BayesianNetwork, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("variable {0} is not bound")]
    Unbound(VarId),
    #[error("variable {0} does not exist")]
    UnknownVariable(VarId),
    #[error("value {value} out of range for variable {var} (cardinality {cardinality})")]
    ValueOutOfRange { var: VarId, value: usize, cardinality: usize },
}

/// A partial map from variables to value indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    bindings: BTreeMap<VarId, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Assignment { bindings: pairs.into_iter().collect() }
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.bindings.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.bindings.contains_key(&var)
    }

    /// Binds `var`, replacing any previous value.
    pub fn bind(&mut self, var: VarId, value: usize) {
        self.bindings.insert(var, value);
    }

    pub fn unbind(&mut self, var: VarId) -> Option<usize> {
        self.bindings.remove(&var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Bindings in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.bindings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.bindings.keys().copied()
    }

    pub fn is_complete(&self, net: &BayesianNetwork) -> bool {
        self.len() == net.num_vars() && self.vars().all(|v| v < net.num_vars())
    }

    /// Restriction to `vars`; variables unbound here are skipped.
    pub fn project(&self, vars: &[VarId]) -> Assignment {
        Assignment::from_pairs(vars.iter().filter_map(|&v| self.get(v).map(|x| (v, x))))
    }

    /// Union of two assignments; `other` wins on overlap.
    pub fn merged(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.bindings.extend(other.iter());
        out
    }

    pub fn is_disjoint(&self, other: &Assignment) -> bool {
        self.vars().all(|v| !other.contains(v))
    }

    /// Checks every binding against the network's variables and cardinalities.
    pub fn validate(&self, net: &BayesianNetwork) -> Result<(), AssignmentError> {
        for (var, value) in self.iter() {
            if var >= net.num_vars() {
                return Err(AssignmentError::UnknownVariable(var));
            }
            let cardinality = net.cardinality(var);
            if value >= cardinality {
                return Err(AssignmentError::ValueOutOfRange { var, value, cardinality });
            }
        }
        Ok(())
    }
}

impl FromIterator<(VarId, usize)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, usize)>>(iter: T) -> Self {
        Assignment::from_pairs(iter)
    }
}

/// `s - X, x`: a copy of `s` with `var` rebound to `value`.
pub fn neighbor(
    net: &BayesianNetwork,
    s: &Assignment,
    var: VarId,
    value: usize,
) -> Result<Assignment, AssignmentError> {
    if var >= net.num_vars() {
        return Err(AssignmentError::UnknownVariable(var));
    }
    if !s.contains(var) {
        return Err(AssignmentError::Unbound(var));
    }
    let cardinality = net.cardinality(var);
    if value >= cardinality {
        return Err(AssignmentError::ValueOutOfRange { var, value, cardinality });
    }
    let mut out = s.clone();
    out.bind(var, value);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::chain_ab;
    use proptest::prelude::*;

    #[test]
    fn flips_one_variable() {
        let net = chain_ab();
        let s = Assignment::from_pairs([(0, 1), (1, 0)]);
        let n = neighbor(&net, &s, 1, 1).unwrap();
        assert_eq!(n, Assignment::from_pairs([(0, 1), (1, 1)]));
        assert_eq!(s.get(1), Some(0));
    }

    #[test]
    fn self_neighbor_is_identity() {
        let net = chain_ab();
        let s = Assignment::from_pairs([(0, 1)]);
        assert_eq!(neighbor(&net, &s, 0, 1).unwrap(), s);
    }

    #[test]
    fn binary_map_vars_have_one_neighbor_each() {
        let net = chain_ab();
        let s = Assignment::from_pairs([(0, 0), (1, 1)]);
        let mut distinct = Vec::new();
        for var in [0, 1] {
            for value in 0..net.cardinality(var) {
                let n = neighbor(&net, &s, var, value).unwrap();
                if n != s {
                    distinct.push(n);
                }
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn neighbor_errors() {
        let net = chain_ab();
        let s = Assignment::from_pairs([(0, 1)]);
        assert_eq!(neighbor(&net, &s, 1, 0), Err(AssignmentError::Unbound(1)));
        assert_eq!(
            neighbor(&net, &s, 0, 2),
            Err(AssignmentError::ValueOutOfRange { var: 0, value: 2, cardinality: 2 })
        );
        assert_eq!(neighbor(&net, &s, 7, 0), Err(AssignmentError::UnknownVariable(7)));
    }

    proptest! {
        #[test]
        fn neighbor_is_involutive(a in 0usize..2, b in 0usize..2, var in 0usize..2, x in 0usize..2) {
            let net = chain_ab();
            let s = Assignment::from_pairs([(0, a), (1, b)]);
            let there = neighbor(&net, &s, var, x).unwrap();
            let back = neighbor(&net, &there, var, s.get(var).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
