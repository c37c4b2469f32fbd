use serde::{Deserialize, Serialize};

use super::adjoint::{cost, integrate_adjoint, switching_function};
use super::iop::{IopStatus, Optimum};
use super::vjp;
use crate::control::{trapezoid, trapezoid_weights, ControlSchedule};
use crate::dde::{integrate, steps_in, Trajectory, DEFAULT_INTERVALS};
use crate::error::{Error, Result};
use crate::model::{rhs_controlled, InitialData, ModelParams, State};

/// Nonmonotone line-search memory.
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const STEP_BOUNDS: (f64, f64) = (1e-10, 1e10);

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub intervals: usize,
    /// Stop when the max-norm of the projected gradient falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting control; a single value is broadcast to every node.
    pub initial: Vec<f64>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            intervals: DEFAULT_INTERVALS,
            tol: 1e-5,
            max_iter: 5000,
            initial: vec![0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStatus {
    Converged,
    /// Iteration budget exhausted; the best iterate is returned.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub control: ControlSchedule,
    /// `t_s` holds `∫ c dt`, the switching time of the equivalent one-switch control.
    pub optimum: Optimum,
    pub iterations: usize,
    pub projected_gradient: f64,
    pub status: GridStatus,
}

/// `J`, its exact gradient with respect to the grid control values, and the
/// trajectory.
///
/// The gradient is the reverse sweep of the forward explicit-trapezoid
/// scheme, so it matches finite differences of the discrete `J` to rounding.
pub fn grid_gradient(
    params: &ModelParams,
    init: &InitialData,
    values: &[f64],
    step: f64,
) -> Result<(f64, Vec<f64>, Trajectory)> {
    let control = ControlSchedule::grid(step, values.to_vec()).with_history(init.c_hist);
    let traj = integrate(params, init, &control, step)?;
    let j = cost(&traj, &control, params.w)?;

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
    let y = traj.states();
    let n = y.len() - 1;
    let hist = init.state();
    let delayed = |idx: isize| if idx <= 0 { hist } else { y[idx as usize] };
    let omega = |idx: usize| control.at_node(idx as isize - q as isize, step);

    let weights = trapezoid_weights(n + 1, step);
    let mut ybar: Vec<State> = weights.iter().map(|&wt| State::new(0.0, 0.0, wt, 0.0)).collect();
    let mut grad: Vec<f64> = weights.iter().map(|&wt| params.w * wt).collect();

    let route_state = |ybar: &mut Vec<State>, idx: isize, dz: f64, dv: f64| {
        if idx >= 1 {
            ybar[idx as usize].z += dz;
            ybar[idx as usize].v += dv;
        }
    };
    let route_control = |grad: &mut Vec<f64>, node: usize, d: f64| {
        let idx = node as isize - q as isize;
        if idx >= 0 {
            grad[idx as usize] += d;
        }
    };

    for i in (0..n).rev() {
        let (w0, w1) = (omega(i), omega(i + 1));
        let d0 = if p == 0 { y[i] } else { delayed(i as isize - p as isize) };
        let k1 = rhs_controlled(y[i], d0.z, d0.v, w0, params);
        let pred = y[i] + k1 * step;
        let d1 = if p == 0 { pred } else { delayed((i + 1) as isize - p as isize) };

        let a = ybar[i + 1];
        let kbar = a * (0.5 * step);
        let mut yi = a;

        let (mut pbar, pz, pv, pw) = vjp(pred, d1.z, d1.v, w1, params, kbar);
        if p == 0 {
            pbar.z += pz;
            pbar.v += pv;
        } else {
            route_state(&mut ybar, (i + 1) as isize - p as isize, pz, pv);
        }
        route_control(&mut grad, i + 1, pw);
        yi += pbar;
        let k1bar = kbar + pbar * step;

        let (mut xbar, xz, xv, xw) = vjp(y[i], d0.z, d0.v, w0, params, k1bar);
        if p == 0 {
            xbar.z += xz;
            xbar.v += xv;
        } else {
            route_state(&mut ybar, i as isize - p as isize, xz, xv);
        }
        route_control(&mut grad, i, xw);
        yi += xbar;
        ybar[i] += yi;
    }
    Ok((j, grad, traj))
}

fn project(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| (project(xi - gi) - xi).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `J` over `N + 1` control values in `[0, 1]` by the spectral
/// projected gradient method with a nonmonotone line search.
pub fn solve_grid(
    params: &ModelParams,
    init: &InitialData,
    opts: &GridOptions,
) -> Result<GridSolution> {
    params.validate()?;
    let n = opts.intervals;
    let step = params.t_f / n as f64;
    let mut x: Vec<f64> = match opts.initial.len() {
        1 => vec![project(opts.initial[0]); n + 1],
        len if len == n + 1 => opts.initial.iter().map(|&c| project(c)).collect(),
        len => {
            return Err(Error::GridMismatch {
                expected: n + 1,
                found: len,
            })
        }
    };

    let (mut f, mut g, _) = grid_gradient(params, init, &x, step)?;
    let mut history = vec![f];
    let mut pg = projected_gradient_norm(&x, &g);
    let mut alpha = if pg > 0.0 { 1.0 / pg } else { 1.0 };
    let mut iterations = 0;
    let mut status = GridStatus::NotConverged;

    while iterations < opts.max_iter {
        if pg < opts.tol {
            status = GridStatus::Converged;
            break;
        }
        let d: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(&xi, &gi)| project(xi - alpha * gi) - xi)
            .collect();
        let gtd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut lambda = 1.0;
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(&xi, &di)| project(xi + lambda * di)).collect();
            let (ft, gt, _) = grid_gradient(params, init, &trial, step)?;
            if ft <= f_ref + ARMIJO * lambda * gtd || lambda < 1e-12 {
                break (trial, ft, gt);
            }
            lambda *= 0.5;
        };

        let (mut ss, mut sy) = (0.0, 0.0);
        for k in 0..x.len() {
            let s = x_new[k] - x[k];
            ss += s * s;
            sy += s * (g_new[k] - g[k]);
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(STEP_BOUNDS.0, STEP_BOUNDS.1)
        } else {
            STEP_BOUNDS.1
        };
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if history.len() > MEMORY {
            history.remove(0);
        }
        pg = projected_gradient_norm(&x, &g);
        iterations += 1;
    }
    if pg < opts.tol {
        status = GridStatus::Converged;
    }

    let control = ControlSchedule::grid(step, x.clone()).with_history(init.c_hist);
    let traj = integrate(params, init, &control, step)?;
    let adjoint = integrate_adjoint(params, &traj, &control)?;
    let phi = switching_function(params, &traj, &adjoint, &control)?;
    let t_s = trapezoid(&x, step);
    let at_edge = t_s <= step || t_s >= params.t_f - step;
    Ok(GridSolution {
        control,
        optimum: Optimum {
            t_s,
            j: f,
            terminal: traj.terminal(),
            phi,
            step,
            j_second: None,
            status: if at_edge {
                IopStatus::Boundary
            } else {
                IopStatus::Interior
            },
        },
        iterations,
        projected_gradient: pg,
        status,
    })
}
