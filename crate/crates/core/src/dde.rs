//! Fixed-step integration of the delayed system by the method of steps.
//!
//! The scheme is the explicit trapezoidal rule (Heun) on a uniform grid.
//! Both delays must be integer multiples of the step, so delayed state and
//! control values are read at exact past nodes. Controls are sampled at the
//! stage nodes, as in a trapezoidal transcription.
//!
//! A bang-bang control makes the vector field jump at `t_s + xi`, and the
//! delayed infection term kinks `tau` later. Around both instants the grid is
//! locally refined: `REFINEMENT` sub-steps per cell over a window of one cell
//! on either side, anchored at the exact switch. The refinement points move
//! with `t_s`, so the final state (and the cost) is a continuous function of
//! the switching time.

use std::io::{self, Write};

use crate::control::ControlSchedule;
use crate::error::{Error, Result};
use crate::model::{rhs_controlled, InitialData, ModelParams, State};

/// Default number of grid intervals on `[0, t_f]`.
pub const DEFAULT_INTERVALS: usize = 2500;

/// Density of the local grid refinement around a control switch.
pub const REFINEMENT: usize = 10;

const NODE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    ya: State,
    yb: State,
    fa: State,
    fb: State,
}

impl Segment {
    fn hermite(&self, t: f64) -> State {
        hermite(self.a, self.b, self.ya, self.yb, self.fa, self.fb, t)
    }
}

/// Refined integration points inside one grid cell.
#[derive(Debug, Clone)]
struct Patch {
    cell: usize,
    segments: Vec<Segment>,
}

/// Solution of the delayed system on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    step: f64,
    tau: f64,
    history: InitialData,
    states: Vec<State>,
    derivs: Vec<State>,
    patches: Vec<Patch>,
}

impl Trajectory {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn history(&self) -> &InitialData {
        &self.history
    }

    /// Samples at `t = i * step`.
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.states.len() - 1)
    }

    pub fn terminal(&self) -> State {
        *self.states.last().expect("trajectory has at least one sample")
    }

    /// Whether any cell carries refined switch points.
    pub fn is_refined(&self) -> bool {
        !self.patches.is_empty()
    }

    /// State at time `t`, for `-tau <= t <= horizon`.
    ///
    /// Grid nodes return the stored sample exactly; other times use cubic
    /// Hermite interpolation with the stored derivatives.
    pub fn sample(&self, t: f64) -> Result<State> {
        let hi = self.horizon();
        let lo = -self.tau;
        let eps = NODE_EPS * self.step;
        if !(t >= lo - eps && t <= hi + eps) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        Ok(self.interpolate(t.min(hi)))
    }

    fn interpolate(&self, t: f64) -> State {
        if t <= 0.0 {
            return self.history.state();
        }
        let x = t / self.step;
        let nearest = x.round();
        if (x - nearest).abs() <= NODE_EPS {
            let idx = nearest as usize;
            if idx < self.states.len() {
                return self.states[idx];
            }
        }
        let cell = (x.floor() as usize).min(self.states.len() - 2);
        if let Some(patch) = self.patch(cell) {
            let seg = patch
                .segments
                .iter()
                .find(|s| t <= s.b)
                .unwrap_or_else(|| patch.segments.last().unwrap());
            return seg.hermite(t);
        }
        hermite(
            self.time(cell),
            self.time(cell + 1),
            self.states[cell],
            self.states[cell + 1],
            self.derivs[cell],
            self.derivs[cell + 1],
            t,
        )
    }

    fn patch(&self, cell: usize) -> Option<&Patch> {
        self.patches
            .binary_search_by_key(&cell, |p| p.cell)
            .ok()
            .map(|i| &self.patches[i])
    }

    /// Trapezoidal quadrature of `g(x(t))` over `[0, horizon]`, using the
    /// refined points inside patched cells.
    pub fn quadrature(&self, g: impl Fn(State) -> f64) -> f64 {
        let mut total = 0.0;
        for cell in 0..self.states.len().saturating_sub(1) {
            match self.patch(cell) {
                Some(p) => {
                    for s in &p.segments {
                        total += 0.5 * (s.b - s.a) * (g(s.ya) + g(s.yb));
                    }
                }
                None => total += 0.5 * self.step * (g(self.states[cell]) + g(self.states[cell + 1])),
            }
        }
        total
    }

    /// Writes `t,Z,I,V,T` rows, one per grid node, with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,Z,I,V,T")?;
        for (i, x) in self.states.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_full(self.time(i)),
                fmt_full(x.z),
                fmt_full(x.i),
                fmt_full(x.v),
                fmt_full(x.t)
            )?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

fn hermite(a: f64, b: f64, ya: State, yb: State, fa: State, fb: State, t: f64) -> State {
    let h = b - a;
    let s = (t - a) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    ya * h00 + fa * (h10 * h) + yb * h01 + fb * (h11 * h)
}

/// Number of steps that make up `value`, or `StepIncompatible`.
pub fn steps_in(quantity: &'static str, value: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParams {
            field: "step",
            reason: format!("step must be finite and > 0, got {step}"),
        });
    }
    let count = (value / step).round();
    if (value - count * step).abs() > 1e-12 * value.abs().max(1.0) {
        return Err(Error::StepIncompatible {
            quantity,
            value,
            step,
        });
    }
    Ok(count as usize)
}

/// Integrates the controlled delayed system on `[0, t_f]`.
pub fn integrate(
    params: &ModelParams,
    init: &InitialData,
    control: &ControlSchedule,
    step: f64,
) -> Result<Trajectory> {
    integrate_horizon(params, init, control, step, params.t_f)
}

/// Integrates on `[0, horizon]`, independently of `params.t_f`.
pub fn integrate_horizon(
    params: &ModelParams,
    init: &InitialData,
    control: &ControlSchedule,
    step: f64,
    horizon: f64,
) -> Result<Trajectory> {
    params.validate()?;
    init.validate()?;
    control.validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidParams {
            field: "horizon",
            reason: format!("horizon must be finite and >= 0, got {horizon}"),
        });
    }
    let n = steps_in("horizon", horizon, step)?;
    let lag = if params.tau > 0.0 {
        steps_in("tau", params.tau, step)?
    } else {
        0
    };
    let control_lag = if params.xi > 0.0 {
        steps_in("xi", params.xi, step)?
    } else {
        0
    };
    if let Some(len) = control.grid_len() {
        if len != n + 1 {
            return Err(Error::GridMismatch {
                expected: n + 1,
                found: len,
            });
        }
    }

    let mut traj = Trajectory {
        step,
        tau: params.tau,
        history: *init,
        states: Vec::with_capacity(n + 1),
        derivs: Vec::with_capacity(n + 1),
        patches: Vec::new(),
    };
    let extras = refinement_points(control, params, step, horizon);
    let mut extra_iter = extras.iter().copied().peekable();

    let hist = init.state();
    let node_delayed = |traj: &Trajectory, idx: isize| -> (f64, f64) {
        if idx <= 0 {
            (hist.z, hist.v)
        } else {
            let x = traj.states[idx as usize];
            (x.z, x.v)
        }
    };
    let omega = |idx: usize| control.at_node(idx as isize - control_lag as isize, step);

    let y0 = hist;
    let (dz, dv) = if lag == 0 { (y0.z, y0.v) } else { (hist.z, hist.v) };
    traj.states.push(y0);
    traj.derivs.push(rhs_controlled(y0, dz, dv, omega(0), params));

    for i in 0..n {
        let t0 = traj.time(i);
        let t1 = traj.time(i + 1);
        let y = traj.states[i];

        let mut inner = Vec::new();
        while let Some(&e) = extra_iter.peek() {
            if e >= t1 - NODE_EPS * step {
                break;
            }
            extra_iter.next();
            if e > t0 + NODE_EPS * step {
                inner.push(e);
            }
        }

        let (y1, d1) = if inner.is_empty() {
            let w0 = omega(i);
            let w1 = omega(i + 1);
            let (z0, v0) = if lag == 0 {
                (y.z, y.v)
            } else {
                node_delayed(&traj, i as isize - lag as isize)
            };
            let k1 = rhs_controlled(y, z0, v0, w0, params);
            let pred = y + k1 * step;
            let (z1, v1) = if lag == 0 {
                (pred.z, pred.v)
            } else {
                node_delayed(&traj, (i + 1) as isize - lag as isize)
            };
            let k2 = rhs_controlled(pred, z1, v1, w1, params);
            let y1 = y + (k1 + k2) * (0.5 * step);
            let (z1, v1) = if lag == 0 { (y1.z, y1.v) } else { (z1, v1) };
            (y1, rhs_controlled(y1, z1, v1, w1, params))
        } else {
            let mut points = Vec::with_capacity(inner.len() + 2);
            points.push(t0);
            points.extend(inner);
            points.push(t1);
            let mut segments = Vec::with_capacity(points.len() - 1);
            let mut ya = y;
            for pair in points.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let w = control.value(0.5 * (a + b) - params.xi);
                let delayed = |t: f64, current: State| -> (f64, f64) {
                    if lag == 0 {
                        (current.z, current.v)
                    } else {
                        let x = traj.interpolate(t - params.tau);
                        (x.z, x.v)
                    }
                };
                let h = b - a;
                let (za, va) = delayed(a, ya);
                let fa = rhs_controlled(ya, za, va, w, params);
                let pred = ya + fa * h;
                let (zb, vb) = delayed(b, pred);
                let k2 = rhs_controlled(pred, zb, vb, w, params);
                let yb = ya + (fa + k2) * (0.5 * h);
                let (zb, vb) = if lag == 0 { (yb.z, yb.v) } else { (zb, vb) };
                let fb = rhs_controlled(yb, zb, vb, w, params);
                segments.push(Segment {
                    a,
                    b,
                    ya,
                    yb,
                    fa,
                    fb,
                });
                ya = yb;
            }
            traj.patches.push(Patch { cell: i, segments });
            let y1 = ya;
            let (z1, v1) = if lag == 0 {
                (y1.z, y1.v)
            } else {
                node_delayed(&traj, (i + 1) as isize - lag as isize)
            };
            (y1, rhs_controlled(y1, z1, v1, omega(i + 1), params))
        };

        if !y1.is_finite() {
            return Err(Error::NonFiniteState { t: t1 });
        }
        traj.states.push(y1);
        traj.derivs.push(d1);
    }
    Ok(traj)
}

/// Sorted refinement points around the delayed switch and its propagated kink.
fn refinement_points(
    control: &ControlSchedule,
    params: &ModelParams,
    step: f64,
    horizon: f64,
) -> Vec<f64> {
    let Some(t_s) = control.switch_time() else {
        return Vec::new();
    };
    if t_s <= 0.0 {
        return Vec::new();
    }
    let switch = t_s + params.xi;
    let mut anchors = vec![switch];
    if params.tau > 0.0 {
        anchors.push(switch + params.tau);
    }
    let fine = step / REFINEMENT as f64;
    let r = REFINEMENT as isize;
    let mut points: Vec<f64> = anchors
        .iter()
        .flat_map(|&b| (-r..=r).map(move |j| b + j as f64 * fine))
        .filter(|&p| p > 0.0 && p < horizon)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= NODE_EPS * step);
    points
}
