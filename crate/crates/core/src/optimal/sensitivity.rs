use std::thread;

use serde::{Deserialize, Serialize};

use super::adjoint::cost;
use super::iop::{solve_iop_with, IopOptions};
use crate::control::ControlSchedule;
use crate::dde::integrate;
use crate::error::{Error, Result};
use crate::model::{InitialData, ModelParams};

/// Derivatives of the re-optimized solution with respect to one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: String,
    pub nominal: f64,
    #[serde(rename = "dt_s")]
    pub dts: f64,
    #[serde(rename = "dJ")]
    pub dj: f64,
    #[serde(rename = "dZ")]
    pub dz: f64,
    #[serde(rename = "dI")]
    pub di: f64,
    #[serde(rename = "dV")]
    pub dv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    /// Optimal switching time at the nominal parameters.
    pub t_s: f64,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityTable {
    pub fn row(&self, parameter: &str) -> Option<&SensitivityRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityOptions {
    /// Perturbation relative to the nominal value.
    pub relative_step: f64,
    /// Combine steps `d` and `d/2` to cancel the leading error term.
    pub richardson: bool,
    pub iop: IopOptions,
    /// Hold this control fixed instead of re-optimizing.
    pub fixed_control: Option<ControlSchedule>,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            relative_step: 1e-3,
            richardson: true,
            iop: IopOptions {
                intervals: 40_000,
                tol: 1e-5,
                second_derivative: false,
                ..IopOptions::default()
            },
            fixed_control: None,
        }
    }
}

/// Default-option sensitivities of `t_s`, `J`, `Z(t_f)`, `I(t_f)`, `V(t_f)`.
pub fn sensitivities(params: &ModelParams, targets: &[&str]) -> Result<SensitivityTable> {
    sensitivities_with(params, &InitialData::default(), targets, &SensitivityOptions::default())
}

pub fn sensitivities_with(
    params: &ModelParams,
    init: &InitialData,
    targets: &[&str],
    opts: &SensitivityOptions,
) -> Result<SensitivityTable> {
    params.validate()?;
    let solve = |p: &ModelParams| -> Result<[f64; 5]> {
        match &opts.fixed_control {
            None => {
                let o = solve_iop_with(p, init, &opts.iop)?;
                Ok([o.t_s, o.j, o.terminal.z, o.terminal.i, o.terminal.v])
            }
            Some(c) => {
                let traj = integrate(p, init, c, opts.iop.step(p))?;
                let j = cost(&traj, c, p.w)?;
                let x = traj.terminal();
                Ok([c.switch_time().unwrap_or(0.0), j, x.z, x.i, x.v])
            }
        }
    };
    let t_s = solve(params)?[0];

    let mut rows = Vec::with_capacity(targets.len());
    for &name in targets {
        let nominal = params.get(name).ok_or_else(|| Error::InvalidParams {
            field: "parameter",
            reason: format!("unknown parameter `{name}`"),
        })?;
        let delta = opts.relative_step * if nominal == 0.0 { 1.0 } else { nominal.abs() };
        let mut offsets = vec![delta, -delta];
        if opts.richardson {
            offsets.extend([0.5 * delta, -0.5 * delta]);
        }
        let results: Vec<Result<[f64; 5]>> = thread::scope(|scope| {
            let handles: Vec<_> = offsets
                .iter()
                .map(|&off| {
                    let mut p = *params;
                    p.set(name, nominal + off);
                    let solve = &solve;
                    scope.spawn(move || solve(&p))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sensitivity worker panicked"))
                .collect()
        });
        let values = results.into_iter().collect::<Result<Vec<_>>>()?;
        let central = |hi: &[f64; 5], lo: &[f64; 5], d: f64| -> [f64; 5] {
            std::array::from_fn(|k| (hi[k] - lo[k]) / (2.0 * d))
        };
        let coarse = central(&values[0], &values[1], delta);
        let d = if opts.richardson {
            let fine = central(&values[2], &values[3], 0.5 * delta);
            std::array::from_fn(|k| (4.0 * fine[k] - coarse[k]) / 3.0)
        } else {
            coarse
        };
        rows.push(SensitivityRow {
            parameter: name.to_string(),
            nominal,
            dts: d[0],
            dj: d[1],
            dz: d[2],
            di: d[3],
            dv: d[4],
        });
    }
    Ok(SensitivityTable { t_s, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_parameter_is_rejected() {
        let err = sensitivities_with(
            &ModelParams::default(),
            &InitialData::default(),
            &["bogus"],
            &SensitivityOptions {
                fixed_control: Some(ControlSchedule::off()),
                ..SensitivityOptions::default()
            },
        );
        assert!(matches!(err, Err(Error::InvalidParams { field: "parameter", .. })));
    }

    #[test]
    fn weight_has_no_effect_on_a_fixed_control() {
        let opts = SensitivityOptions {
            fixed_control: Some(ControlSchedule::off()),
            iop: IopOptions {
                intervals: 2500,
                ..IopOptions::default()
            },
            ..SensitivityOptions::default()
        };
        let table =
            sensitivities_with(&ModelParams::default(), &InitialData::default(), &["w"], &opts)
                .unwrap();
        let row = table.row("w").unwrap();
        assert_eq!((row.dz, row.di, row.dv, row.dj), (0.0, 0.0, 0.0, 0.0));
    }
}
