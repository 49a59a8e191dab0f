//! Brute-force ground truth used to score learners and to check the
//! approximation theory numerically.

mod dp;
mod inherent;
mod taylor;

pub use dp::{dp_solve, policy_value, random_policy_value, GridDP, OracleReport};
pub use inherent::{inherent_error_estimate, minimax_fit, InherentErrorConfig, InherentErrorReport, Witness};
pub use taylor::{taylor_remainder_check, TaylorCheck};
