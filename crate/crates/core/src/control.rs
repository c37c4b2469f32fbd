use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the drug-efficacy control `c(t)` on `[0, t_f]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlProfile {
    Constant(f64),
    /// `c = 1` on `[0, t_s)` and `c = 0` on `[t_s, t_f]`.
    BangBang { t_s: f64 },
    /// Nodal values on the uniform integration grid; piecewise linear in between.
    Grid { step: f64, values: Vec<f64> },
}

/// A control profile together with its constant history on `[-xi, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub profile: ControlProfile,
    pub c_hist: f64,
}

impl ControlSchedule {
    pub fn constant(c: f64) -> Self {
        Self {
            profile: ControlProfile::Constant(c),
            c_hist: 0.0,
        }
    }

    pub fn off() -> Self {
        Self::constant(0.0)
    }

    pub fn bang_bang(t_s: f64) -> Self {
        Self {
            profile: ControlProfile::BangBang { t_s },
            c_hist: 0.0,
        }
    }

    pub fn grid(step: f64, values: Vec<f64>) -> Self {
        Self {
            profile: ControlProfile::Grid { step, values },
            c_hist: 0.0,
        }
    }

    pub fn with_history(mut self, c_hist: f64) -> Self {
        self.c_hist = c_hist;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidParams { field, reason });
        if !(0.0..=1.0).contains(&self.c_hist) {
            return bad("c_hist", format!("must lie in [0, 1], got {}", self.c_hist));
        }
        match &self.profile {
            ControlProfile::Constant(c) if !(0.0..=1.0).contains(c) => {
                bad("c", format!("constant control must lie in [0, 1], got {c}"))
            }
            ControlProfile::BangBang { t_s } if !(t_s.is_finite() && *t_s >= 0.0) => {
                bad("t_s", format!("switching time must be finite and >= 0, got {t_s}"))
            }
            ControlProfile::Grid { step, values } => {
                if !(step.is_finite() && *step > 0.0) {
                    return bad("step", format!("grid step must be > 0, got {step}"));
                }
                if values.is_empty() {
                    return bad("values", "grid control has no samples".into());
                }
                match values.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                    Some(c) => bad("values", format!("grid control value {c} outside [0, 1]")),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// `c(t)`, with the history value for `t < 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.c_hist;
        }
        match &self.profile {
            ControlProfile::Constant(c) => *c,
            ControlProfile::BangBang { t_s } => {
                if t < *t_s {
                    1.0
                } else {
                    0.0
                }
            }
            ControlProfile::Grid { step, values } => {
                let x = t / step;
                let j = x.floor() as usize;
                if j + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let frac = x - j as f64;
                values[j] * (1.0 - frac) + values[j + 1] * frac
            }
        }
    }

    /// `c` at grid node `index` of a grid with spacing `step`.
    pub fn at_node(&self, index: isize, step: f64) -> f64 {
        if index < 0 {
            return self.c_hist;
        }
        match &self.profile {
            ControlProfile::Grid { values, .. } => {
                values[(index as usize).min(values.len() - 1)]
            }
            _ => self.value(index as f64 * step),
        }
    }

    /// The single switching time of a bang-bang profile.
    pub fn switch_time(&self) -> Option<f64> {
        match self.profile {
            ControlProfile::BangBang { t_s } => Some(t_s),
            _ => None,
        }
    }

    /// `∫₀^{t_f} c(t) dt`, exact for piecewise-constant profiles and
    /// trapezoidal for grid profiles.
    pub fn integral(&self, t_f: f64) -> f64 {
        match &self.profile {
            ControlProfile::Constant(c) => c * t_f,
            ControlProfile::BangBang { t_s } => t_s.clamp(0.0, t_f),
            ControlProfile::Grid { step, values } => trapezoid(values, *step),
        }
    }

    /// Number of grid samples for grid profiles.
    pub fn grid_len(&self) -> Option<usize> {
        match &self.profile {
            ControlProfile::Grid { values, .. } => Some(values.len()),
            _ => None,
        }
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => step * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Trapezoid weights for `len` uniformly spaced samples.
pub fn trapezoid_weights(len: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; len];
    if len > 0 {
        w[0] = 0.5 * step;
        w[len - 1] = 0.5 * step;
    }
    if len == 1 {
        w[0] = 0.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bang_bang_shape() {
        let c = ControlSchedule::bang_bang(47.0);
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(46.999), 1.0);
        assert_eq!(c.value(47.0), 0.0);
        assert_eq!(c.value(50.0), 0.0);
        assert_eq!(c.value(-0.1), 0.0);
        assert_eq!(c.with_history(0.25).value(-0.1), 0.25);
    }

    #[test]
    fn grid_interpolates_and_indexes() {
        let c = ControlSchedule::grid(0.5, vec![1.0, 0.0, 0.5]);
        assert_eq!(c.value(0.25), 0.5);
        assert_eq!(c.at_node(2, 0.5), 0.5);
        assert_eq!(c.at_node(-3, 0.5), 0.0);
        assert!((c.integral(1.0) - 0.5 * (0.5 * 1.5 + 0.0)).abs() < 1e-15);
    }

    #[test]
    fn integrals() {
        assert_eq!(ControlSchedule::bang_bang(47.08).integral(50.0), 47.08);
        assert_eq!(ControlSchedule::bang_bang(60.0).integral(50.0), 50.0);
        assert_eq!(ControlSchedule::constant(1.0).integral(50.0), 50.0);
    }

    #[test]
    fn validation() {
        assert!(ControlSchedule::constant(1.2).validate().is_err());
        assert!(ControlSchedule::bang_bang(-1.0).validate().is_err());
        assert!(ControlSchedule::grid(0.1, vec![0.0, 2.0]).validate().is_err());
        assert!(ControlSchedule::off().with_history(2.0).validate().is_err());
        assert!(ControlSchedule::bang_bang(3.0).validate().is_ok());
    }

    #[test]
    fn weights_sum_to_span() {
        let w = trapezoid_weights(11, 0.1);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
