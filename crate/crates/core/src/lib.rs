//! Causal Bayesian networks for safety analysis: exact and sampled
//! inference, interventions, importance metrics and fault trees.

pub mod analysis;
pub mod bundled;
pub mod error;
pub mod fault_tree;
pub mod inference;
pub mod intervention;
pub mod metrics;
pub mod model;
pub mod reproduce;

pub use error::{Error, Result};
pub use model::{CausalNetwork, Cpt, Variable};
