//! Accelerated policy optimization on tabular MDPs.
//!
//! Exact solvers and Bellman operators, softmax and direct policies on the
//! simplex, auto-regressive update rules (momentum, optimism,
//! extra-gradient), and online agents that learn optimistic gradient
//! critics by forward search or by meta-gradients.

pub mod agents;
pub mod bellman;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod optim;
pub mod policy;
pub mod updates;

pub use bellman::QTable;
pub use error::{Error, Result};
pub use mdp::TabularMdp;
pub use policy::{DirectPolicy, Policy, TabularPolicy};
