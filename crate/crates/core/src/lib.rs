//! Exact and local-search MAP inference for discrete Bayesian networks.
//!
//! - [`network`]: the model, assignments, and the JSON file format.
//! - [`elim`]: moral graphs, min-fill orders (plain and MAP-constrained), widths.
//! - [`inference`]: variable elimination for `Pr(e)`, marginals, MPE and exact MAP,
//!   plus an enumeration oracle.
//! - [`trace`]: the recorded elimination trace whose reverse pass scores every
//!   neighbor of a MAP state in one evaluation.
//! - [`search`]: hill climbing with random restarts, taboo search, initializations.
//! - [`netgen`]: random structures, bias quantification, MAP/evidence selection.
//! - [`experiments`]: width, solution-quality and evaluation-count experiments.

pub mod elim;
pub mod experiments;
pub mod factor;
pub mod inference;
pub mod netgen;
pub mod network;
pub mod prob;
pub mod search;
pub mod trace;

pub use network::{Assignment, BayesianNetwork, VarId};
pub use prob::ScaledProb;
