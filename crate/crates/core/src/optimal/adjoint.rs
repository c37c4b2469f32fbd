use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::vjp;
use crate::control::ControlSchedule;
use crate::dde::{fmt_full, steps_in, Trajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

/// `|phi|` below this counts towards a singular arc.
pub const SINGULAR_TOL: f64 = 1e-6;
/// Consecutive near-zero nodes that constitute a singular arc.
pub const SINGULAR_RUN: usize = 5;

/// Costate `(lambda_Z, lambda_I, lambda_V, lambda_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Adjoint {
    #[serde(rename = "lZ")]
    pub lz: f64,
    #[serde(rename = "lI")]
    pub li: f64,
    #[serde(rename = "lV")]
    pub lv: f64,
    #[serde(rename = "lT")]
    pub lt: f64,
}

impl From<State> for Adjoint {
    fn from(s: State) -> Self {
        Adjoint {
            lz: s.z,
            li: s.i,
            lv: s.v,
            lt: s.t,
        }
    }
}

impl From<Adjoint> for State {
    fn from(a: Adjoint) -> Self {
        State::new(a.lz, a.li, a.lv, a.lt)
    }
}

/// Costate samples on the coarse grid of a forward trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    step: f64,
    values: Vec<State>,
    derivs: Vec<State>,
}

impl AdjointTrajectory {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, index: usize) -> Adjoint {
        self.values[index].into()
    }

    /// `d lambda / dt` at node `index`.
    pub fn derivative(&self, index: usize) -> Adjoint {
        self.derivs[index].into()
    }

    pub fn values(&self) -> Vec<Adjoint> {
        self.values.iter().map(|&s| s.into()).collect()
    }

    fn raw(&self, index: usize) -> State {
        self.values[index]
    }
}

fn check_grid(traj: &Trajectory, control: &ControlSchedule) -> Result<()> {
    if let Some(len) = control.grid_len() {
        if len != traj.len() {
            return Err(Error::GridMismatch {
                expected: traj.len(),
                found: len,
            });
        }
    }
    Ok(())
}

fn lags(params: &ModelParams, step: f64) -> Result<(usize, usize)> {
    let p = if params.tau > 0.0 {
        steps_in("tau", params.tau, step)?
    } else {
        0
    };
    let q = if params.xi > 0.0 {
        steps_in("xi", params.xi, step)?
    } else {
        0
    };
    Ok((p, q))
}

/// `J = ∫ V dt + w ∫ c dt` over the trajectory horizon.
///
/// The state part uses the trajectory's refined quadrature; the control part
/// is exact for piecewise-constant profiles and trapezoidal for grids.
pub fn cost(traj: &Trajectory, control: &ControlSchedule, w: f64) -> Result<f64> {
    check_grid(traj, control)?;
    Ok(traj.quadrature(|x| x.v) + w * control.integral(traj.horizon()))
}

/// Integrates the costate backward from `lambda(t_f) = 0`.
///
/// Explicit trapezoid on the forward grid. The advanced terms at `t + tau`
/// read costate nodes that are already computed.
pub fn integrate_adjoint(
    params: &ModelParams,
    traj: &Trajectory,
    control: &ControlSchedule,
) -> Result<AdjointTrajectory> {
    check_grid(traj, control)?;
    let h = traj.step();
    let (p, q) = lags(params, h)?;
    let n = traj.len() - 1;
    let states = traj.states();
    let hist = traj.history().state();
    let delayed = |idx: isize| -> State {
        if idx <= 0 {
            hist
        } else {
            states[idx as usize]
        }
    };
    let omega = |idx: usize| control.at_node(idx as isize - q as isize, h);
    let e_v = State::new(0.0, 0.0, 1.0, 0.0);

    // d lambda/dt at node i given lambda there and the stored costate ahead.
    let rhs = |i: usize, lam: State, ahead: &[State]| -> State {
        let x = states[i];
        if p == 0 {
            let (dx, dz, dv, _) = vjp(x, x.z, x.v, omega(i), params, lam);
            return State::ZERO - e_v - dx - State::new(dz, 0.0, dv, 0.0);
        }
        let d = delayed(i as isize - p as isize);
        let (dx, _, _, _) = vjp(x, d.z, d.v, omega(i), params, lam);
        let mut out = State::ZERO - e_v - dx;
        if i + p <= n {
            let (_, dz, dv, _) = vjp(states[i + p], x.z, x.v, omega(i + p), params, ahead[i + p]);
            out = out - State::new(dz, 0.0, dv, 0.0);
        }
        out
    };

    let mut values = vec![State::ZERO; n + 1];
    let mut derivs = vec![State::ZERO; n + 1];
    derivs[n] = rhs(n, State::ZERO, &values);
    for i in (0..n).rev() {
        let k1 = derivs[i + 1];
        let pred = values[i + 1] - k1 * h;
        let k2 = rhs(i, pred, &values);
        let lam = values[i + 1] - (k1 + k2) * (0.5 * h);
        if !lam.is_finite() {
            return Err(Error::NonFiniteState { t: traj.time(i) });
        }
        values[i] = lam;
        derivs[i] = rhs(i, lam, &values);
    }
    Ok(AdjointTrajectory {
        step: h,
        values,
        derivs,
    })
}

/// Switching function at every grid node.
///
/// `phi(t) = w + lambda_Z r V Z - lambda_I r V(·-tau) Z(·-tau)`, all evaluated at
/// `t + xi`, for `t <= t_f - xi`; `phi = w` afterwards.
pub fn switching_function(
    params: &ModelParams,
    traj: &Trajectory,
    adjoint: &AdjointTrajectory,
    control: &ControlSchedule,
) -> Result<Vec<f64>> {
    check_grid(traj, control)?;
    if adjoint.len() != traj.len() {
        return Err(Error::GridMismatch {
            expected: traj.len(),
            found: adjoint.len(),
        });
    }
    let (p, q) = lags(params, traj.step())?;
    let n = traj.len() - 1;
    let states = traj.states();
    let hist = traj.history().state();
    let phi = (0..=n)
        .map(|i| {
            let j = i + q;
            if j > n {
                return params.w;
            }
            let x = states[j];
            let d = if j <= p { hist } else { states[j - p] };
            let d = if p == 0 { x } else { d };
            let lam = adjoint.raw(j);
            params.w + lam.z * params.r * x.v * x.z - lam.i * params.r * d.v * d.z
        })
        .collect();
    Ok(phi)
}

/// Outcome of checking a control against the sign of the switching function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmpReport {
    /// Nodes where `c` disagrees with the sign of `phi`, outside the switch band.
    pub violations: usize,
    /// `phi < 0` before the switch, `phi > 0` after, and `phi` increasing through it.
    pub strict_bang_bang: bool,
    pub switch_time: Option<f64>,
    /// Minimum `|phi|` outside the one-node band around the switch.
    pub min_abs_phi: f64,
    pub phi_dot_at_switch: Option<f64>,
    pub singular_arc: bool,
}

/// Checks the minimum-principle control law node by node.
///
/// The switching time is the control's own for bang-bang profiles, otherwise
/// the first node where `c` drops below one half.
pub fn verify_pmp(control: &ControlSchedule, phi: &[f64], step: f64) -> PmpReport {
    let n = phi.len();
    let c: Vec<f64> = (0..n).map(|i| control.at_node(i as isize, step)).collect();
    let switch_time = control.switch_time().or_else(|| {
        c.iter()
            .position(|&v| v < 0.5)
            .filter(|&k| k > 0)
            .map(|k| (k as f64 - 0.5) * step)
    });
    let in_band = |i: usize| switch_time.is_some_and(|ts| (i as f64 * step - ts).abs() <= step);
    let tol = 1e-9;

    let mut violations = 0;
    let mut min_abs_phi = f64::INFINITY;
    for i in (0..n).filter(|&i| !in_band(i)) {
        min_abs_phi = min_abs_phi.min(phi[i].abs());
        let wrong = (phi[i] < 0.0 && c[i] < 1.0 - tol) || (phi[i] > 0.0 && c[i] > tol);
        if wrong {
            violations += 1;
        }
    }

    let phi_dot_at_switch = switch_time.and_then(|ts| {
        let k = (ts / step).floor() as usize;
        (k + 1 < n).then(|| (phi[k + 1] - phi[k]) / step)
    });
    let strict_bang_bang = match (switch_time, phi_dot_at_switch) {
        (Some(ts), Some(slope)) => {
            slope > 0.0
                && (0..n).filter(|&i| !in_band(i)).all(|i| {
                    let t = i as f64 * step;
                    if t < ts {
                        phi[i] < 0.0
                    } else {
                        phi[i] > 0.0
                    }
                })
        }
        _ => false,
    };

    let mut run = 0;
    let mut singular_arc = false;
    for &v in phi {
        run = if v.abs() < SINGULAR_TOL { run + 1 } else { 0 };
        singular_arc |= run >= SINGULAR_RUN;
    }

    PmpReport {
        violations,
        strict_bang_bang,
        switch_time,
        min_abs_phi,
        phi_dot_at_switch,
        singular_arc,
    }
}

/// Writes `t,phi,c` rows with 17 significant digits.
pub fn write_phi_csv<W: Write>(
    mut out: W,
    phi: &[f64],
    control: &ControlSchedule,
    step: f64,
) -> io::Result<()> {
    writeln!(out, "t,phi,c")?;
    for (i, v) in phi.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            fmt_full(i as f64 * step),
            fmt_full(*v),
            fmt_full(control.at_node(i as isize, step))
        )?;
    }
    Ok(())
}
