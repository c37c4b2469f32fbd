use thiserror::Error;

use crate::model::Equilibrium;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("step {step} does not evenly divide {quantity} = {value}")]
    StepIncompatible {
        quantity: &'static str,
        value: f64,
        step: f64,
    },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("time {t} outside of the sampled range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("equilibrium {0:?} does not exist for these parameters")]
    EquilibriumAbsent(Equilibrium),

    #[error("grid mismatch: expected {expected} samples, found {found}")]
    GridMismatch { expected: usize, found: usize },
}
