use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use hivoc::{InitialData, ModelParams, Scenario};

use crate::Failure;

/// One experiment, as read from a JSON file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    pub init: InitialData,
    /// Overrides `params.tau` and `params.xi` when set.
    pub scenario: Option<Scenario>,
    pub grid_n: Option<usize>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            Failure::config(format!(
                "{}: invalid value at `{}`: {}",
                path.display(),
                e.path(),
                e.inner()
            ))
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, Failure> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Applies flag overrides and checks the result.
    pub fn resolve(mut self, case: Option<u8>, w: Option<f64>) -> Result<Self, Failure> {
        if let Some(n) = case {
            self.scenario = Some(
                Scenario::from_number(n)
                    .ok_or_else(|| Failure::config(format!("unknown case {n}; expected 1, 2 or 3")))?,
            );
        }
        if let Some(s) = self.scenario {
            self.params = s.apply(&self.params);
        }
        if let Some(w) = w {
            self.params.w = w;
        }
        self.params.validate().map_err(Failure::config)?;
        self.init.validate().map_err(Failure::config)?;
        if self.grid_n == Some(0) {
            return Err(Failure::config("grid_n must be positive"));
        }
        Ok(self)
    }

    /// Scenario label for reports.
    pub fn case_label(&self) -> &'static str {
        let delays = (self.params.tau, self.params.xi);
        Scenario::PRESETS
            .iter()
            .find(|s| s.delays() == delays)
            .map_or("custom", |s| s.label())
    }
}
