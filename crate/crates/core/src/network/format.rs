//! JSON network files.
//!
//! ```json
//! {
//!   "variables": [{"name": "A", "cardinality": 2}, {"name": "B", "cardinality": 2}],
//!   "cpts": [
//!     {"child": "A", "parents": [], "table": [0.4, 0.6]},
//!     {"child": "B", "parents": ["A"], "table": [0.8, 0.2, 0.1, 0.9]}
//!   ]
//! }
//! ```
//!
//! Variable ids follow the order of `variables`. Each `table` is row-major over
//! configurations of `parents` in the order listed, last parent fastest, with
//! the child's values contiguous inside a row. Serialization always lists
//! parents in ascending id order and writes floats in shortest round-trip form.

use serde::{Deserialize, Serialize};

use super::{BayesianNetwork, NetworkBuilder, NetworkError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub variables: Vec<VariableDecl>,
    pub cpts: Vec<CptDecl>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub cardinality: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptDecl {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

impl NetworkFile {
    pub fn from_network(net: &BayesianNetwork) -> Self {
        let name = |id| net.variable(id).name.clone();
        NetworkFile {
            variables: net
                .variables()
                .iter()
                .map(|v| VariableDecl { name: v.name.clone(), cardinality: v.cardinality as u64 })
                .collect(),
            cpts: net
                .cpts()
                .iter()
                .map(|c| CptDecl {
                    child: name(c.child()),
                    parents: c.parents().iter().map(|&p| name(p)).collect(),
                    table: c.table().to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_network(self) -> Result<BayesianNetwork, NetworkError> {
        let mut builder = NetworkBuilder::new();
        for v in &self.variables {
            if v.cardinality < 2 {
                return Err(NetworkError::Cardinality { name: v.name.clone(), cardinality: v.cardinality });
            }
            builder.variable(v.name.clone(), v.cardinality as usize);
        }
        let lookup = |name: &str| {
            self.variables
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| NetworkError::UnknownVariable(name.to_string()))
        };
        for cpt in &self.cpts {
            let child = lookup(&cpt.child)?;
            let parents = cpt.parents.iter().map(|p| lookup(p)).collect::<Result<Vec<_>, _>>()?;
            builder.cpt(child, &parents, cpt.table.clone());
        }
        builder.build()
    }
}

pub(crate) fn syntax_error(e: serde_json::Error) -> NetworkError {
    NetworkError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_network(text: &str) -> Result<BayesianNetwork, NetworkError> {
    let file: NetworkFile = serde_json::from_str(text).map_err(syntax_error)?;
    file.into_network()
}

pub fn serialize_network(net: &BayesianNetwork) -> String {
    serde_json::to_string_pretty(&NetworkFile::from_network(net)).expect("network serializes")
}
