//! Clearing-payment equilibria in shocked financial networks, and discrete
//! bailout allocation under a budget.
//!
//! The crate models a payment network where node `j` owes `P[j][i]` to node
//! `i` and `b[j]` to the external sector, holds external assets `c[j]`, and
//! may be hit by a random shock `x ∈ [0, c]`. Payments settle at the unique
//! equilibrium of the truncated flow map `Φ(p̄) = p ∧ (Aᵀp̄ + c − x + cash)`,
//! which exists and is unique because every node owes something outside the
//! network (strictly substochastic relative liabilities).
//!
//! On top of clearing it provides:
//!
//! * welfare objectives over clearing vectors ([`objectives`]),
//! * the budgeted bailout problem, its LP relaxation, randomized rounding,
//!   greedy hill-climbing, brute force, and ranking heuristics ([`bailout`]),
//! * Gini-style fairness metrics, fairness-constrained relaxations and the
//!   price of fairness ([`fairness`]), with spectral diagnostics
//!   ([`spectral`]),
//! * generators for the pathological instances used in testing
//!   ([`instances`]), a textual instance format ([`io`]), and the experiment
//!   harness behind the CLI ([`experiment`]).

pub mod bailout;
pub mod centrality;
pub mod experiment;
pub mod fairness;
pub mod instances;
pub mod io;
pub mod lp;
pub mod network;
pub mod objectives;
pub mod shocks;
pub mod spectral;

pub use bailout::{Allocation, BailoutProblem, SolverReport};
pub use network::{ClearingOptions, ClearingResult, FinancialNetwork, NetworkError};
pub use objectives::{LinearKind, Objective};
pub use shocks::{SeededRng, ShockDistribution, ShockKind};
