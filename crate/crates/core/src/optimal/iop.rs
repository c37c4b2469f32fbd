use serde::{Deserialize, Serialize};

use super::adjoint::{cost, integrate_adjoint, switching_function};
use crate::control::ControlSchedule;
use crate::dde::{integrate, Trajectory, DEFAULT_INTERVALS};
use crate::error::Result;
use crate::model::{InitialData, ModelParams, State};

/// Step sizes for the Richardson-extrapolated second difference of `J(t_s)`.
pub const J_SECOND_DELTAS: [f64; 2] = [0.05, 0.025];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IopStatus {
    Interior,
    /// The minimum sits at `t_s = 0` or `t_s = t_f`; no interior bracket exists.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IopOptions {
    /// Coarse grid intervals on `[0, t_f]`.
    pub intervals: usize,
    /// Uniform scan points used to bracket the minimum.
    pub scan: usize,
    /// Golden-section bracket width.
    pub tol: f64,
    /// Refine the golden-section result by a secant search on `J'(t_s)`.
    pub polish: bool,
    pub second_derivative: bool,
}

impl Default for IopOptions {
    fn default() -> Self {
        Self {
            intervals: DEFAULT_INTERVALS,
            scan: 50,
            tol: 1e-4,
            polish: true,
            second_derivative: true,
        }
    }
}

impl IopOptions {
    pub fn step(&self, params: &ModelParams) -> f64 {
        params.t_f / self.intervals as f64
    }
}

/// A one-switch bang-bang optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub t_s: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub terminal: State,
    /// Switching function at the grid nodes.
    pub phi: Vec<f64>,
    pub step: f64,
    #[serde(rename = "J_second")]
    pub j_second: Option<f64>,
    pub status: IopStatus,
}

/// `J` for the bang-bang control switching at `t_s`, with its trajectory.
pub fn iop_cost(
    params: &ModelParams,
    init: &InitialData,
    t_s: f64,
    step: f64,
) -> Result<(f64, Trajectory)> {
    let control = ControlSchedule::bang_bang(t_s).with_history(init.c_hist);
    let traj = integrate(params, init, &control, step)?;
    let j = cost(&traj, &control, params.w)?;
    Ok((j, traj))
}

/// Optimal switching time with default options and initial data.
pub fn solve_iop(params: &ModelParams) -> Result<Optimum> {
    solve_iop_with(params, &InitialData::default(), &IopOptions::default())
}

pub fn solve_iop_with(
    params: &ModelParams,
    init: &InitialData,
    opts: &IopOptions,
) -> Result<Optimum> {
    params.validate()?;
    let step = opts.step(params);
    let t_f = params.t_f;
    let j_of = |t: f64| iop_cost(params, init, t, step).map(|(j, _)| j);

    let scan = opts.scan.max(2);
    let knots: Vec<f64> = (0..=scan).map(|k| t_f * k as f64 / scan as f64).collect();
    let values = knots.iter().map(|&t| j_of(t)).collect::<Result<Vec<_>>>()?;
    let best = (0..=scan)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let lo = knots[best.saturating_sub(1)];
    let hi = knots[(best + 1).min(scan)];
    let (mut t_s, mut j) = golden(&j_of, lo, hi, opts.tol)?;
    let mut status = IopStatus::Interior;

    if best == 0 || best == scan {
        let edge = knots[best];
        if (t_s - edge).abs() <= 2.0 * opts.tol {
            status = IopStatus::Boundary;
            t_s = edge;
            j = j_of(edge)?;
        }
    }
    if opts.polish && status == IopStatus::Interior {
        if let Some(t) = secant_on_slope(&j_of, t_s, opts.tol)? {
            let jt = j_of(t)?;
            if jt <= j + 1e-9 * j.abs().max(1.0) {
                (t_s, j) = (t, jt);
            }
        }
    }

    let control = ControlSchedule::bang_bang(t_s).with_history(init.c_hist);
    let traj = integrate(params, init, &control, step)?;
    let adjoint = integrate_adjoint(params, &traj, &control)?;
    let phi = switching_function(params, &traj, &adjoint, &control)?;
    let j_second = if opts.second_derivative && status == IopStatus::Interior {
        Some(second_derivative(params, init, t_s, step)?)
    } else {
        None
    };
    Ok(Optimum {
        t_s,
        j,
        terminal: traj.terminal(),
        phi,
        step,
        j_second,
        status,
    })
}

fn golden(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc < fd {
            (b, d, fd) = (d, c, fc);
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Root of the central-difference slope near `t0`, if the secant iteration
/// settles within `radius` of it.
fn secant_on_slope(f: &impl Fn(f64) -> Result<f64>, t0: f64, radius: f64) -> Result<Option<f64>> {
    const D: f64 = 1e-3;
    let slope = |t: f64| -> Result<f64> { Ok((f(t + D)? - f(t - D)?) / (2.0 * D)) };
    let (mut a, mut b) = (t0, t0 + 0.1 * radius);
    let (mut ga, mut gb) = (slope(a)?, slope(b)?);
    for _ in 0..30 {
        if gb == ga {
            break;
        }
        let next = b - gb * (b - a) / (gb - ga);
        if !next.is_finite() || (next - t0).abs() > radius {
            return Ok(None);
        }
        (a, ga) = (b, gb);
        b = next;
        if (b - a).abs() < 1e-10 {
            return Ok(Some(b));
        }
        gb = slope(b)?;
    }
    Ok(((b - t0).abs() <= radius).then_some(b))
}

/// `J''(t_s)` by a Richardson-extrapolated central second difference.
pub fn second_derivative(
    params: &ModelParams,
    init: &InitialData,
    t_s: f64,
    step: f64,
) -> Result<f64> {
    let mut err = None;
    let value = second_derivative_of(
        |t| match iop_cost(params, init, t, step) {
            Ok((j, _)) => j,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        t_s,
        J_SECOND_DELTAS,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Second derivative of `f` at `t` from central differences at `deltas[0]`
/// and `deltas[1] = deltas[0] / 2`, extrapolated to zero step.
pub fn second_derivative_of(mut f: impl FnMut(f64) -> f64, t: f64, deltas: [f64; 2]) -> f64 {
    let f0 = f(t);
    let mut diff = |d: f64| (f(t + d) - 2.0 * f0 + f(t - d)) / (d * d);
    let coarse = diff(deltas[0]);
    let fine = diff(deltas[1]);
    let ratio = (deltas[0] / deltas[1]).powi(2);
    (ratio * fine - coarse) / (ratio - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_is_exact_on_quadratics() {
        let c = 3.7;
        let v = second_derivative_of(|t| (t - c) * (t - c), 1.25, J_SECOND_DELTAS);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn golden_finds_a_parabola_minimum() {
        let (x, fx) = golden(&|t: f64| Ok((t - 1.3).powi(2) + 4.0), 0.0, 3.0, 1e-8).unwrap();
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 4.0).abs() < 1e-12);
    }

    #[test]
    fn secant_polishes_a_smooth_minimum() {
        let t = secant_on_slope(&|t: f64| Ok((t - 2.0).powi(2) + (t - 2.0).powi(4)), 2.00005, 1e-4)
            .unwrap()
            .unwrap();
        assert!((t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_minimum_is_flagged() {
        // Prohibitive drug cost: never treat.
        let p = ModelParams {
            w: 1e6,
            t_f: 5.0,
            ..ModelParams::default()
        };
        let opts = IopOptions {
            intervals: 250,
            ..IopOptions::default()
        };
        let opt = solve_iop_with(&p, &InitialData::default(), &opts).unwrap();
        assert_eq!(opt.status, IopStatus::Boundary);
        assert_eq!(opt.t_s, 0.0);
        assert!(opt.j_second.is_none());
    }
}
