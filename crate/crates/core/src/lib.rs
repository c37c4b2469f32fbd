//! Delayed HIV-1 infection model with CTL response: simulation, stability of
//! equilibria, and optimal control of reverse-transcriptase-inhibitor
//! efficacy under an intracellular (state) delay and a pharmacological
//! (control) delay.

pub mod control;
pub mod dde;
pub mod error;
pub mod model;
pub mod optimal;
pub mod scenario;
pub mod stability;

pub use control::{ControlProfile, ControlSchedule};
pub use dde::{integrate, integrate_horizon, Trajectory};
pub use error::{Error, Result};
pub use model::{
    equilibria, reproduction_numbers, rhs_controlled, rhs_uncontrolled, Equilibrium,
    EquilibriumSet, InitialData, ModelParams, State,
};
pub use scenario::Scenario;
