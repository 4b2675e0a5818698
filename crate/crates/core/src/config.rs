//! The single JSON configuration document. Every field has a default and
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powertrain::VehicleParams;
use crate::trailer::TrailerParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt_s: f64,
    /// Base-cycle repetitions per working day.
    pub repeats: usize,
    pub break_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_s: 1.0,
            repeats: 3,
            break_s: 2700.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_step: f64,
    pub lower_range: [f64; 2],
    pub upper_range: [f64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            lower_range: [0.20, 0.95],
            upper_range: [0.25, 1.00],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyConfig {
    /// Upper bound on re-simulation rounds; `None` derives one from the
    /// mission length.
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpConfig {
    pub soc_grid_step: f64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            soc_grid_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub trailer: TrailerParams,
    pub sim: SimConfig,
    pub sweep: SweepConfig,
    pub greedy: GreedyConfig,
    pub dp: DpConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::harness::to_json(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate().map_err(Error::InvalidInput)?;
        self.trailer.validate().map_err(Error::InvalidInput)?;
        let sim = &self.sim;
        if !(sim.dt_s.is_finite() && sim.dt_s > 0.0) {
            return Err(Error::invalid("sim.dt_s must be positive"));
        }
        if sim.repeats == 0 {
            return Err(Error::invalid("sim.repeats must be at least 1"));
        }
        if !(sim.break_s.is_finite() && sim.break_s >= 0.0) {
            return Err(Error::invalid("sim.break_s must be non-negative"));
        }
        let sw = &self.sweep;
        if !(sw.grid_step.is_finite() && sw.grid_step > 0.0) {
            return Err(Error::invalid("sweep.grid_step must be positive"));
        }
        for (name, [lo, hi]) in [
            ("lower_range", sw.lower_range),
            ("upper_range", sw.upper_range),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::invalid(format!(
                    "sweep.{name} must be an ordered range in [0, 1]"
                )));
            }
        }
        if self.greedy.max_iterations == Some(0) {
            return Err(Error::invalid("greedy.max_iterations must be at least 1"));
        }
        if !(1e-4..=1e-2).contains(&self.dp.soc_grid_step) {
            return Err(Error::invalid("dp.soc_grid_step must lie in [1e-4, 1e-2]"));
        }
        Ok(())
    }
}
