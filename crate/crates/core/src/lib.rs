//! Causal-state reconstruction from discrete time series.
//!
//! The [`cssr`] module infers a minimal unifilar predictive model (a
//! [`machine::CausalStateMachine`]) from symbol sequences. [`sources`] holds
//! reference processes, [`baselines`] the comparison methods and
//! [`harness`] the experiment runner used by the `cssr` binary.

pub mod error;
pub mod sequence;
pub mod parse_tree;
pub mod stats;
pub mod machine;
pub mod sources;
pub mod cssr;
pub mod baselines;
pub mod seed;
pub mod harness;

pub use crate::cssr::{run_cssr, run_cssr_on_tree, CssrConfig, CssrOutput, Diagnostics};
pub use error::{CssrError, Result};
pub use machine::{CausalStateMachine, StateSpec, WordDistribution};
pub use parse_tree::ParseTree;
pub use sequence::{Alphabet, Symbol, SymbolMode, SymbolSequence, Word};
pub use stats::{Distribution, TestKind};
