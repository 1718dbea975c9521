//! Stochastic concurrent game structures with imperfect information,
//! their nondeterministic projection, coalition strategies and induced MDPs.

mod distribution;
mod game;
pub mod json;
mod mdp;
mod strategy;
mod validate;

pub use distribution::{format_prob, parse_decimal, parse_prob, prob_to_f64, Distribution, Prob};
pub use game::{cartesian, Game, Icgs, IcgsBuilder, JointAction, Move, NondetCgs, StateInfo};
pub use mdp::{induce_mdp, project_nondeterministic, Mdp};
pub use strategy::{
    enumerate_strategies, NamedStrategy, Slot, StrategyIter, StrategyProfile, StrategySpace,
};
pub use validate::{validate, validate_nondet, ValidationReport, Violation};

pub(crate) use mdp::{induced_choices, project_unchecked};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("strategy for agent {agent} at observation class {class} {}", match action {
        Some(a) => format!("picks illegal action {a}"),
        None => "has no choice".to_string(),
    })]
    IllegalStrategy {
        agent: String,
        class: usize,
        action: Option<String>,
    },
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("model format: {0}")]
    Format(String),
}
