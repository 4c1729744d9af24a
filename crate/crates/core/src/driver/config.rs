use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scheme::{Ladder, SchemeParams};
use crate::time::TimeGrid;

use super::scenario::RhoBar;
use super::schedule::Mode;
use super::sweep::SweepConfig;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeGridConfig {
    pub n_t: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub ps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub margin: f64,
    pub flow_substeps: usize,
    pub det_tolerance: f64,
    pub flow_tolerance: f64,
    /// fixed time scale for every step; searched when absent
    pub tau: Option<f64>,
    /// fixed ladder for every step; the default ladder when absent
    pub ladder: Option<Ladder>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = SchemeParams::new(1.0, 1.0, 1.0);
        Tolerances {
            margin: p.margin,
            flow_substeps: p.flow_substeps,
            det_tolerance: p.det_tolerance,
            flow_tolerance: p.flow_tolerance,
            tau: None,
            ladder: None,
        }
    }
}

impl Tolerances {
    pub fn params(&self, p: f64, eta: f64, delta: f64) -> SchemeParams {
        SchemeParams {
            tau: self.tau,
            ladder: self.ladder,
            margin: self.margin,
            flow_substeps: self.flow_substeps,
            det_tolerance: self.det_tolerance,
            flow_tolerance: self.flow_tolerance,
            ..SchemeParams::new(p, eta, delta)
        }
    }
}

/// Parameters of a single `step` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub p: f64,
    pub eta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub timegrid: TimeGridConfig,
    #[serde(default)]
    pub scenario: RhoBar,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub step: Option<StepConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_mode() -> Mode {
    Mode::RhoClose
}

fn default_epsilon() -> f64 {
    0.1
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(s)?;
        c.grid()?;
        c.times()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.d, self.grid.n)
    }

    pub fn times(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.timegrid.n_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(r#"{"grid":{"d":3,"n":16},"timegrid":{"n_t":8}}"#).unwrap();
        assert_eq!(c.mode, Mode::RhoClose);
        assert_eq!(c.schedule.steps, 0);
        assert!(RunConfig::from_json(r#"{"grid":{"d":3,"n":16},"timegrid":{"n_t":8},"bogus":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid":{"d":3,"n":12},"timegrid":{"n_t":8}}"#).is_err());
    }
}
