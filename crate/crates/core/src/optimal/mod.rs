//! Optimal treatment: minimize `J(c) = ∫ V + w c dt` over controls `c(t) ∈ [0, 1]`.
//!
//! The adjoint system carries advanced arguments at `t + tau` (from the state
//! delay) and the switching function reads the adjoint at `t + xi` (from the
//! control delay). Optima are searched either over the switching time of a
//! one-switch bang-bang control or over a full control grid.

mod adjoint;
mod grid;
mod iop;
mod report;
mod sensitivity;

pub use adjoint::{
    cost, integrate_adjoint, switching_function, verify_pmp, write_phi_csv, Adjoint,
    AdjointTrajectory, PmpReport, SINGULAR_RUN, SINGULAR_TOL,
};
pub use grid::{grid_gradient, solve_grid, GridOptions, GridSolution, GridStatus};
pub use iop::{
    iop_cost, second_derivative, second_derivative_of, solve_iop, solve_iop_with, IopOptions,
    IopStatus, Optimum, J_SECOND_DELTAS,
};
pub use report::{OptimumReport, PmpSummary};
pub use sensitivity::{
    sensitivities, sensitivities_with, SensitivityOptions, SensitivityRow, SensitivityTable,
};

use crate::model::{ModelParams, State};

/// Vector-Jacobian products of the controlled right-hand side.
///
/// For `f(x, zeta, eta, omega)` and a cotangent `a`, returns
/// `(f_x^T a, f_zeta^T a, f_eta^T a, f_omega^T a)`.
pub(crate) fn vjp(
    x: State,
    zeta: f64,
    eta: f64,
    omega: f64,
    p: &ModelParams,
    a: State,
) -> (State, f64, f64, f64) {
    let eff = 1.0 - omega;
    let dx = State {
        z: -a.z * (p.m + eff * p.r * x.v),
        i: -a.i * (p.u + p.s * x.t) + a.v * p.k + a.t * p.a * x.t,
        v: -a.z * eff * p.r * x.z - a.v * p.v,
        t: -a.i * p.s * x.i + a.t * (p.a * x.i - p.n),
    };
    let dzeta = a.i * eff * p.r * eta;
    let deta = a.i * eff * p.r * zeta;
    let domega = a.z * p.r * x.v * x.z - a.i * p.r * eta * zeta;
    (dx, dzeta, deta, domega)
}
