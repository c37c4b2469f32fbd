//! Parameters, state vectors and the delayed vector fields of the
//! within-host HIV-1 model with CTL response.
//!
//! State ordering is always `(Z, I, V, T)`:
//!
//! | Symbol | Meaning                               |
//! |--------|---------------------------------------|
//! | `Z`    | uninfected target cells (mm⁻³)        |
//! | `I`    | infected cells (mm⁻³)                 |
//! | `V`    | free virus particles (mm⁻³)           |
//! | `T`    | cytotoxic T lymphocytes, CTLs (mm⁻³)  |
//!
//! The infection term uses the intracellularly delayed values
//! `Z(t - tau)`, `V(t - tau)`, and drug efficacy enters through the
//! pharmacologically delayed control `c(t - xi)`.

use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to classify threshold ties (`R0 = 1`, `R0 = 1 + R1`).
pub const THRESHOLD_TOL: f64 = 1e-12;

/// Biological rates, horizon, delays and cost weight.
///
/// Units are documentation only. Defaults are the reference parameter set
/// with `w = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Production rate of uninfected cells (day⁻¹ mm⁻³).
    pub lambda: f64,
    /// Death rate of uninfected cells (day⁻¹).
    pub m: f64,
    /// Infection rate (mm³ virion⁻¹ day⁻¹).
    pub r: f64,
    /// Death rate of infected cells (day⁻¹).
    pub u: f64,
    /// CTL killing rate (mm³ day⁻¹).
    pub s: f64,
    /// Virion production rate (day⁻¹).
    pub k: f64,
    /// Virion clearance rate (day⁻¹).
    pub v: f64,
    /// CTL proliferation rate (mm³ day⁻¹).
    pub a: f64,
    /// CTL decay rate (day⁻¹).
    pub n: f64,
    /// Horizon (day).
    pub t_f: f64,
    /// Intracellular delay (day).
    pub tau: f64,
    /// Pharmacological delay (day).
    pub xi: f64,
    /// Weight of the treatment cost.
    pub w: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            m: 0.03,
            r: 0.0014,
            u: 0.32,
            s: 0.05,
            k: 153.6,
            v: 1.0,
            a: 0.2,
            n: 0.3,
            t_f: 50.0,
            tau: 0.5,
            xi: 0.2,
            w: 1.0,
        }
    }
}

impl ModelParams {
    /// Checks the value-object invariants.
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("lambda", self.lambda),
            ("m", self.m),
            ("r", self.r),
            ("u", self.u),
            ("s", self.s),
            ("k", self.k),
            ("v", self.v),
            ("a", self.a),
            ("n", self.n),
        ];
        for (field, value) in rates {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("rate must be finite and > 0, got {value}"),
                });
            }
        }
        for (field, value) in [("tau", self.tau), ("xi", self.xi)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("delay must be finite and >= 0, got {value}"),
                });
            }
        }
        if !(self.t_f.is_finite() && self.t_f > self.tau && self.t_f > self.xi) {
            return Err(Error::InvalidParams {
                field: "t_f",
                reason: format!(
                    "horizon must exceed both delays (t_f = {}, tau = {}, xi = {})",
                    self.t_f, self.tau, self.xi
                ),
            });
        }
        if !(self.w.is_finite() && self.w >= 0.0) {
            return Err(Error::InvalidParams {
                field: "w",
                reason: format!("cost weight must be finite and >= 0, got {}", self.w),
            });
        }
        Ok(())
    }

    /// Returns a copy with the delays replaced.
    pub fn with_delays(mut self, tau: f64, xi: f64) -> Self {
        self.tau = tau;
        self.xi = xi;
        self
    }

    /// Names accepted by [`ModelParams::get`] and [`ModelParams::set`].
    pub const FIELDS: [&'static str; 13] = [
        "lambda", "m", "r", "u", "s", "k", "v", "a", "n", "t_f", "tau", "xi", "w",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "lambda" => self.lambda,
            "m" => self.m,
            "r" => self.r,
            "u" => self.u,
            "s" => self.s,
            "k" => self.k,
            "v" => self.v,
            "a" => self.a,
            "n" => self.n,
            "t_f" => self.t_f,
            "tau" => self.tau,
            "xi" => self.xi,
            "w" => self.w,
            _ => return None,
        })
    }

    /// Sets a field by name. Returns `None` for an unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> Option<()> {
        let slot = match name {
            "lambda" => &mut self.lambda,
            "m" => &mut self.m,
            "r" => &mut self.r,
            "u" => &mut self.u,
            "s" => &mut self.s,
            "k" => &mut self.k,
            "v" => &mut self.v,
            "a" => &mut self.a,
            "n" => &mut self.n,
            "t_f" => &mut self.t_f,
            "tau" => &mut self.tau,
            "xi" => &mut self.xi,
            "w" => &mut self.w,
            _ => return None,
        };
        *slot = value;
        Some(())
    }
}

/// A point `(Z, I, V, T)` of the state space, or a derivative of one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl State {
    pub const ZERO: State = State::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(z: f64, i: f64, v: f64, t: f64) -> Self {
        Self { z, i, v, t }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.z, self.i, self.v, self.t]
    }

    pub fn from_array([z, i, v, t]: [f64; 4]) -> Self {
        Self { z, i, v, t }
    }

    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn min_component(self) -> f64 {
        self.to_array().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.z + rhs.z, self.i + rhs.i, self.v + rhs.v, self.t + rhs.t)
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, rhs: State) {
        *self = *self + rhs;
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.z - rhs.z, self.i - rhs.i, self.v - rhs.v, self.t - rhs.t)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, rhs: f64) -> State {
        State::new(self.z * rhs, self.i * rhs, self.v * rhs, self.t * rhs)
    }
}

/// Initial values of `I`, `T` and the constant histories of `Z`, `V` and `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    /// `Z(t)` on `[-tau, 0]`.
    #[serde(rename = "Z_hist")]
    pub z_hist: f64,
    /// `V(t)` on `[-tau, 0]`.
    #[serde(rename = "V_hist")]
    pub v_hist: f64,
    /// `c(t)` on `[-xi, 0)`.
    pub c_hist: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            i0: 3.0,
            t0: 20.0,
            z_hist: 45.0,
            v_hist: 75.0,
            c_hist: 0.0,
        }
    }
}

impl InitialData {
    /// Constant history placed exactly at `state`, with no drug in the past.
    pub fn at_state(state: State) -> Self {
        Self {
            i0: state.i,
            t0: state.t,
            z_hist: state.z,
            v_hist: state.v,
            c_hist: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("I0", self.i0),
            ("T0", self.t0),
            ("Z_hist", self.z_hist),
            ("V_hist", self.v_hist),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("initial value must be finite and >= 0, got {value}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.c_hist) {
            return Err(Error::InvalidParams {
                field: "c_hist",
                reason: format!("control history must lie in [0, 1], got {}", self.c_hist),
            });
        }
        Ok(())
    }

    /// The state at `t = 0`.
    pub fn state(&self) -> State {
        State::new(self.z_hist, self.i0, self.v_hist, self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equilibrium {
    /// Infection-free.
    E0,
    /// CTL-inactivated infection.
    E1,
    /// CTL-activated infection.
    E2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "E0")]
    pub e0: State,
    #[serde(rename = "E1")]
    pub e1: Option<State>,
    #[serde(rename = "E2")]
    pub e2: Option<State>,
    /// `R0` ties `1` within [`THRESHOLD_TOL`]; `E1` is then reported absent.
    pub e1_boundary: bool,
    /// `R0` ties `1 + R1` within [`THRESHOLD_TOL`]; `E2` is then reported absent.
    pub e2_boundary: bool,
}

impl EquilibriumSet {
    pub fn get(&self, which: Equilibrium) -> Option<State> {
        match which {
            Equilibrium::E0 => Some(self.e0),
            Equilibrium::E1 => self.e1,
            Equilibrium::E2 => self.e2,
        }
    }

    /// Present equilibria in `E0, E1, E2` order.
    pub fn present(&self) -> Vec<(Equilibrium, State)> {
        [Equilibrium::E0, Equilibrium::E1, Equilibrium::E2]
            .into_iter()
            .filter_map(|e| self.get(e).map(|s| (e, s)))
            .collect()
    }
}

/// `(R0, R1) = (k lambda r / (m u v), k n r / (m a v))`.
pub fn reproduction_numbers(p: &ModelParams) -> (f64, f64) {
    let r0 = p.k * p.lambda * p.r / (p.m * p.u * p.v);
    let r1 = p.k * p.n * p.r / (p.m * p.a * p.v);
    (r0, r1)
}

/// Closed-form equilibria. Equilibria do not depend on the delays.
pub fn equilibria(p: &ModelParams) -> EquilibriumSet {
    let (r0, r1) = reproduction_numbers(p);
    let e0 = State::new(p.lambda / p.m, 0.0, 0.0, 0.0);

    let e1_boundary = (r0 - 1.0).abs() < THRESHOLD_TOL;
    let e1 = (r0 > 1.0 && !e1_boundary).then(|| {
        let excess = p.k * p.lambda * p.r - p.m * p.u * p.v;
        State::new(
            p.u * p.v / (p.k * p.r),
            excess / (p.k * p.r * p.u),
            excess / (p.v * p.r * p.u),
            0.0,
        )
    });

    let e2_boundary = (r0 - (1.0 + r1)).abs() < THRESHOLD_TOL;
    let e2 = (r0 > 1.0 + r1 && !e2_boundary).then(|| {
        let denom = p.a * p.m * p.v + p.k * p.n * p.r;
        State::new(
            p.a * p.lambda * p.v / denom,
            p.n / p.a,
            p.k * p.n / (p.a * p.v),
            (p.a * p.k * p.lambda * p.r - p.a * p.m * p.u * p.v - p.k * p.n * p.r * p.u)
                / (denom * p.s),
        )
    });

    EquilibriumSet {
        r0,
        r1,
        e0,
        e1,
        e2,
        e1_boundary,
        e2_boundary,
    }
}

/// Right-hand side of the controlled delayed system.
///
/// `delayed_z`, `delayed_v` are `Z(t - tau)`, `V(t - tau)` and `c_delayed`
/// is `c(t - xi)`.
#[inline]
pub fn rhs_controlled(
    x: State,
    delayed_z: f64,
    delayed_v: f64,
    c_delayed: f64,
    p: &ModelParams,
) -> State {
    let open = 1.0 - c_delayed;
    State {
        z: p.lambda - p.m * x.z - open * p.r * x.v * x.z,
        i: open * p.r * delayed_v * delayed_z - p.u * x.i - p.s * x.i * x.t,
        v: p.k * x.i - p.v * x.v,
        t: p.a * x.i * x.t - p.n * x.t,
    }
}

/// Right-hand side of the uncontrolled delayed system.
#[inline]
pub fn rhs_uncontrolled(x: State, delayed_z: f64, delayed_v: f64, p: &ModelParams) -> State {
    State {
        z: p.lambda - p.m * x.z - p.r * x.v * x.z,
        i: p.r * delayed_v * delayed_z - p.u * x.i - p.s * x.i * x.t,
        v: p.k * x.i - p.v * x.v,
        t: p.a * x.i * x.t - p.n * x.t,
    }
}

/// Max-norm of the uncontrolled vector field at a constant state.
pub fn residual(x: State, p: &ModelParams) -> f64 {
    rhs_controlled(x, x.z, x.v, 0.0, p).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_thresholds() {
        let (r0, r1) = reproduction_numbers(&ModelParams::default());
        assert_relative_eq!(r0, 112.0, max_relative = 1e-12);
        assert_relative_eq!(r1, 10.752, max_relative = 1e-12);
    }

    #[test]
    fn r0_is_one_when_rates_balance() {
        let mut p = ModelParams::default();
        p.r = p.m * p.u * p.v / (p.k * p.lambda);
        let (r0, _) = reproduction_numbers(&p);
        assert_relative_eq!(r0, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn reference_equilibria() {
        let p = ModelParams::default();
        let eq = equilibria(&p);
        assert_relative_eq!(eq.e0.z, 5.0 / 0.03, max_relative = 1e-14);
        assert_eq!((eq.e0.i, eq.e0.v, eq.e0.t), (0.0, 0.0, 0.0));

        let e1 = eq.e1.expect("E1 exists when R0 > 1");
        assert_relative_eq!(e1.z, 0.32 / (153.6 * 0.0014), max_relative = 1e-14);
        assert!((e1.z - 1.4881).abs() < 1e-4);
        assert_eq!(e1.t, 0.0);

        let e2 = eq.e2.expect("E2 exists when R0 > 1 + R1");
        for (got, want) in e2.to_array().iter().zip([14.182, 1.5, 230.4, 54.5939]) {
            assert!((got - want).abs() < 5e-4, "{got} vs {want}");
        }
        for (_, e) in eq.present() {
            assert!(residual(e, &p) < 1e-9);
        }
    }

    #[test]
    fn low_infectivity_leaves_only_e0() {
        let mut p = ModelParams::default();
        p.r /= 200.0;
        let eq = equilibria(&p);
        assert!((eq.r0 - 0.56).abs() < 1e-12);
        assert!(eq.e1.is_none() && eq.e2.is_none());
    }

    #[test]
    fn boundary_r0_flags_e1() {
        let mut p = ModelParams::default();
        p.r = p.m * p.u * p.v / (p.k * p.lambda);
        let eq = equilibria(&p);
        assert!(eq.e1_boundary);
        assert!(eq.e1.is_none());
    }

    #[test]
    fn rhs_hand_substitution() {
        // (45, 3, 75, 20) with delayed (45, 75), no drug.
        let p = ModelParams::default();
        let d = rhs_controlled(State::new(45.0, 3.0, 75.0, 20.0), 45.0, 75.0, 0.0, &p);
        // Z' = 5 - 1.35 - 4.725
        assert_relative_eq!(d.z, -1.075, max_relative = 1e-12);
        // I' = 4.725 - 0.96 - 3.0
        assert_relative_eq!(d.i, 0.765, max_relative = 1e-12);
        // V' = 460.8 - 75
        assert_relative_eq!(d.v, 385.8, max_relative = 1e-12);
        // T' = 12 - 6
        assert_relative_eq!(d.t, 6.0, max_relative = 1e-12);
    }

    #[test]
    fn virus_free_dynamics_decouple() {
        let p = ModelParams::default();
        for c in [0.0, 0.3, 1.0] {
            let d = rhs_controlled(State::new(80.0, 0.0, 0.0, 0.0), 80.0, 0.0, c, &p);
            assert_eq!(d, State::new(p.lambda - p.m * 80.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn e2_is_fixed_point_of_field() {
        let p = ModelParams::default();
        let e2 = equilibria(&p).e2.unwrap();
        assert!(rhs_controlled(e2, e2.z, e2.v, 0.0, &p).max_abs() < 1e-9);
    }

    #[test]
    fn validate_rejects_bad_values() {
        let p = ModelParams {
            k: 0.0,
            ..ModelParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParams { field: "k", .. })));
        let p = ModelParams::default().with_delays(60.0, 0.0);
        assert!(matches!(p.validate(), Err(Error::InvalidParams { field: "t_f", .. })));
        let init = InitialData {
            c_hist: 1.5,
            ..InitialData::default()
        };
        assert!(init.validate().is_err());
    }

    #[test]
    fn get_set_by_name() {
        let mut p = ModelParams::default();
        for name in ModelParams::FIELDS {
            let v = p.get(name).unwrap();
            p.set(name, v * 2.0).unwrap();
            assert_eq!(p.get(name), Some(v * 2.0));
        }
        assert!(p.get("bogus").is_none());
    }
}
