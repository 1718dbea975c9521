//! Quantitative checking of `<<C>>^{~d} path` by strategy enumeration over
//! induced MDPs, with a game-solving shortcut under perfect information.

mod check;
mod solver;

pub use check::{check_patl, check_pctl, CheckConfig, Verdict, VerificationResult};
pub use solver::{mdp_extremal, Direction, Objective, ProbVector};
