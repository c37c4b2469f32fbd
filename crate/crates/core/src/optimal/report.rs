use serde::{Deserialize, Serialize};

use super::adjoint::PmpReport;
use super::iop::Optimum;
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmpSummary {
    pub violations: usize,
    pub strict_bang_bang: bool,
}

impl From<&PmpReport> for PmpSummary {
    fn from(r: &PmpReport) -> Self {
        Self {
            violations: r.violations,
            strict_bang_bang: r.strict_bang_bang,
        }
    }
}

/// JSON summary of a solved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub case: String,
    pub tau: f64,
    pub xi: f64,
    pub w: f64,
    pub t_s: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub terminal: State,
    #[serde(rename = "J_second")]
    pub j_second: Option<f64>,
    pub pmp: PmpSummary,
}

impl OptimumReport {
    pub fn new(case: impl Into<String>, params: &ModelParams, opt: &Optimum, pmp: &PmpReport) -> Self {
        Self {
            case: case.into(),
            tau: params.tau,
            xi: params.xi,
            w: params.w,
            t_s: opt.t_s,
            j: opt.j,
            terminal: opt.terminal,
            j_second: opt.j_second,
            pmp: pmp.into(),
        }
    }
}
