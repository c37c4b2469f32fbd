use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

/// Delay configuration of an optimal-control run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// No delays.
    Case1,
    /// Intracellular delay only, `tau = 0.5`.
    Case2,
    /// `tau = 0.5`, `xi = 0.2`.
    Case3,
    Custom { tau: f64, xi: f64 },
}

impl Scenario {
    pub const PRESETS: [Scenario; 3] = [Scenario::Case1, Scenario::Case2, Scenario::Case3];

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::Case1),
            2 => Some(Self::Case2),
            3 => Some(Self::Case3),
            _ => None,
        }
    }

    /// `(tau, xi)` for this scenario.
    pub fn delays(&self) -> (f64, f64) {
        match *self {
            Self::Case1 => (0.0, 0.0),
            Self::Case2 => (0.5, 0.0),
            Self::Case3 => (0.5, 0.2),
            Self::Custom { tau, xi } => (tau, xi),
        }
    }

    pub fn apply(&self, params: &ModelParams) -> ModelParams {
        let (tau, xi) = self.delays();
        params.with_delays(tau, xi)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Case1 => "case1",
            Self::Case2 => "case2",
            Self::Case3 => "case3",
            Self::Custom { .. } => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Custom { tau, xi } => write!(f, "custom(tau={tau}, xi={xi})"),
            other => f.write_str(other.label()),
        }
    }
}
