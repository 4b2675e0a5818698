//! Truck longitudinal dynamics and a parametric diesel fuel model.
//!
//! The engine is described by a torque envelope (flat plateau with linear
//! tapers on both sides) and a smooth brake-efficiency surface that peaks at
//! `rpm_opt` under full load. Fuel is brake power over efficiency times the
//! volumetric heating value, plus a constant idle flow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Efficiency floor applied to the surface far away from the sweet spot.
pub const MIN_EFFICIENCY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowertrainError {
    #[error("overspeed: {v_mps} m/s exceeds rpm_max in every gear")]
    Overspeed { v_mps: f64 },
    #[error("engine torque limit exceeded: {torque_nm:.1} Nm > {limit_nm:.1} Nm at {rpm:.0} rpm")]
    TorqueLimit {
        torque_nm: f64,
        limit_nm: f64,
        rpm: f64,
    },
    #[error("towing unavailable while braking")]
    TowingWhileBraking,
    #[error("towing unavailable: full power")]
    TowingFullPower,
    #[error("vehicle must be moving (v = {v_mps} m/s)")]
    NotMoving { v_mps: f64 },
    #[error("wheel force must be non-negative on the traction side (got {f_n} N)")]
    NegativeForce { f_n: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    pub tau_max_nm: f64,
    pub rpm_idle: f64,
    pub rpm_plateau_lo: f64,
    pub rpm_plateau_hi: f64,
    pub rpm_max: f64,
    /// Fraction of `tau_max_nm` available at idle speed.
    pub torque_frac_idle: f64,
    /// Fraction of `tau_max_nm` available at `rpm_max`.
    pub torque_frac_max: f64,
    pub eta_max: f64,
    pub rpm_opt: f64,
    pub c_speed: f64,
    pub c_load: f64,
    /// Volumetric lower heating value of diesel, J/L.
    pub lhv_vol_jpl: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            tau_max_nm: 2500.0,
            rpm_idle: 600.0,
            rpm_plateau_lo: 1000.0,
            rpm_plateau_hi: 1400.0,
            rpm_max: 1800.0,
            torque_frac_idle: 0.5,
            torque_frac_max: 0.6,
            eta_max: 0.45,
            rpm_opt: 1200.0,
            c_speed: 0.35,
            c_load: 0.45,
            lhv_vol_jpl: 35.8e6,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rpm_idle < self.rpm_plateau_lo
            && self.rpm_plateau_lo <= self.rpm_opt
            && self.rpm_opt <= self.rpm_plateau_hi
            && self.rpm_plateau_hi < self.rpm_max)
        {
            return Err(
                "engine speeds must satisfy idle < plateau_lo <= opt <= plateau_hi < max".into(),
            );
        }
        if !(self.eta_max > 0.0 && self.eta_max < 0.5) {
            return Err("eta_max must lie in (0, 0.5)".into());
        }
        if !(self.tau_max_nm > 0.0 && self.lhv_vol_jpl > 0.0) {
            return Err("tau_max_nm and lhv_vol_jpl must be positive".into());
        }
        let fracs = [self.torque_frac_idle, self.torque_frac_max];
        if fracs.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err("torque fractions must lie in (0, 1]".into());
        }
        if self.c_speed < 0.0 || self.c_load < 0.0 || self.c_load >= 1.0 {
            return Err("c_speed must be >= 0 and c_load in [0, 1)".into());
        }
        Ok(())
    }

    /// Full-load torque at `rpm`.
    pub fn torque_limit(&self, rpm: f64) -> f64 {
        let frac = if rpm <= self.rpm_idle {
            self.torque_frac_idle
        } else if rpm < self.rpm_plateau_lo {
            let x = (rpm - self.rpm_idle) / (self.rpm_plateau_lo - self.rpm_idle);
            self.torque_frac_idle + (1.0 - self.torque_frac_idle) * x
        } else if rpm <= self.rpm_plateau_hi {
            1.0
        } else if rpm < self.rpm_max {
            let x = (rpm - self.rpm_plateau_hi) / (self.rpm_max - self.rpm_plateau_hi);
            1.0 + (self.torque_frac_max - 1.0) * x
        } else {
            self.torque_frac_max
        };
        self.tau_max_nm * frac
    }

    /// Brake efficiency at (`rpm`, `torque_nm`), clamped below at [`MIN_EFFICIENCY`].
    pub fn efficiency(&self, rpm: f64, torque_nm: f64) -> f64 {
        let ds = (rpm - self.rpm_opt) / (self.rpm_max - self.rpm_idle);
        let u = (torque_nm / self.torque_limit(rpm)).clamp(0.0, 1.0);
        let speed_term = 1.0 - self.c_speed * ds * ds;
        let load_term = 1.0 - self.c_load * (1.0 - u) * (1.0 - u);
        (self.eta_max * speed_term * load_term).max(MIN_EFFICIENCY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Gross combination mass, rotating inertia included.
    pub mass_kg: f64,
    pub crr: f64,
    pub cda_m2: f64,
    pub rho_air_kgm3: f64,
    pub g_ms2: f64,
    pub wheel_radius_m: f64,
    pub driveline_eff: f64,
    /// Gearbox ratios, highest reduction first.
    pub gear_ratios: Vec<f64>,
    pub final_drive_ratio: f64,
    pub idle_fuel_lps: f64,
    pub engine: EngineParams,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass_kg: 40_000.0,
            crr: 0.0055,
            cda_m2: 5.6,
            rho_air_kgm3: 1.188,
            g_ms2: 9.81,
            wheel_radius_m: 0.49,
            driveline_eff: 0.93,
            gear_ratios: vec![14.9, 11.6, 9.0, 7.0, 5.4, 4.2, 3.3, 2.5, 2.0, 1.5, 1.2, 1.0],
            final_drive_ratio: 2.64,
            idle_fuel_lps: 1.1e-4,
            engine: EngineParams::default(),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.mass_kg,
            self.crr,
            self.cda_m2,
            self.rho_air_kgm3,
            self.g_ms2,
            self.wheel_radius_m,
            self.final_drive_ratio,
            self.idle_fuel_lps,
        ];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err("vehicle parameters must be positive".into());
        }
        if !(self.driveline_eff > 0.0 && self.driveline_eff <= 1.0) {
            return Err("driveline_eff must lie in (0, 1]".into());
        }
        if self.gear_ratios.is_empty() || self.gear_ratios.iter().any(|r| !(*r > 0.0)) {
            return Err("gear_ratios must be a non-empty list of positive ratios".into());
        }
        if self.gear_ratios.windows(2).any(|w| w[1] >= w[0]) {
            return Err("gear_ratios must be strictly decreasing".into());
        }
        self.engine.validate()
    }

    /// Engine speed in rpm at wheel speed `v_mps` in gear `gear`.
    pub fn engine_rpm(&self, v_mps: f64, gear: usize) -> f64 {
        let total = self.gear_ratios[gear] * self.final_drive_ratio;
        v_mps * total / (2.0 * PI * self.wheel_radius_m) * 60.0
    }

    pub fn total_ratio(&self, gear: usize) -> f64 {
        self.gear_ratios[gear] * self.final_drive_ratio
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub rpm: f64,
    pub torque_nm: f64,
    pub gear_index: usize,
}

/// Signed wheel force demanded by the speed trace; negative means braking.
pub fn traction_force(v_mps: f64, accel_mps2: f64, grade_pct: f64, p: &VehicleParams) -> f64 {
    let theta = (grade_pct / 100.0).atan();
    let m = p.mass_kg;
    let rolling = if v_mps > 0.0 {
        m * p.g_ms2 * p.crr * theta.cos()
    } else {
        0.0
    };
    let climbing = m * p.g_ms2 * theta.sin();
    let aero = 0.5 * p.rho_air_kgm3 * p.cda_m2 * v_mps * v_mps;
    m * accel_mps2 + rolling + climbing + aero
}

/// Deterministic shift rule: the longest gear that keeps the engine on or
/// above the torque plateau, else the shortest gear that is not overspeeding.
pub fn select_gear(v_mps: f64, p: &VehicleParams) -> Result<usize, PowertrainError> {
    if !(v_mps > 0.0) {
        return Err(PowertrainError::NotMoving { v_mps });
    }
    let e = &p.engine;
    let n = p.gear_ratios.len();
    for gear in (0..n).rev() {
        let rpm = p.engine_rpm(v_mps, gear);
        if rpm >= e.rpm_plateau_lo && rpm <= e.rpm_max {
            return Ok(gear);
        }
    }
    (0..n)
        .find(|&gear| p.engine_rpm(v_mps, gear) <= e.rpm_max)
        .ok_or(PowertrainError::Overspeed { v_mps })
}

/// Engine operating point for a traction-side wheel force. Below idle speed
/// the clutch slips and the engine is held at `rpm_idle`.
pub fn operating_point(
    f_wheel_n: f64,
    v_mps: f64,
    p: &VehicleParams,
) -> Result<OperatingPoint, PowertrainError> {
    if f_wheel_n < 0.0 {
        return Err(PowertrainError::NegativeForce { f_n: f_wheel_n });
    }
    let gear = select_gear(v_mps, p)?;
    let rpm = p.engine_rpm(v_mps, gear).max(p.engine.rpm_idle);
    let torque = f_wheel_n * p.wheel_radius_m / (p.total_ratio(gear) * p.driveline_eff);
    let limit = p.engine.torque_limit(rpm);
    if torque > limit {
        return Err(PowertrainError::TorqueLimit {
            torque_nm: torque,
            limit_nm: limit,
            rpm,
        });
    }
    Ok(OperatingPoint {
        rpm,
        torque_nm: torque,
        gear_index: gear,
    })
}

/// Fuel flow in L/s at an operating point.
pub fn fuel_rate(op: &OperatingPoint, p: &VehicleParams) -> f64 {
    let omega = op.rpm * 2.0 * PI / 60.0;
    let power = op.torque_nm * omega;
    if power <= 0.0 {
        return p.idle_fuel_lps;
    }
    let eta = p.engine.efficiency(op.rpm, op.torque_nm);
    power / (eta * p.engine.lhv_vol_jpl) + p.idle_fuel_lps
}

/// Extra fuel flow (L/s) from adding the generator's retarding force
/// `f_tow_n` on top of the base traction demand at the same speed.
pub fn marginal_towing_fuel(
    f_base_n: f64,
    f_tow_n: f64,
    v_mps: f64,
    p: &VehicleParams,
) -> Result<f64, PowertrainError> {
    if f_base_n < 0.0 {
        return Err(PowertrainError::TowingWhileBraking);
    }
    let base = operating_point(f_base_n, v_mps, p)?;
    let with_tow = match operating_point(f_base_n + f_tow_n, v_mps, p) {
        Ok(op) => op,
        Err(PowertrainError::TorqueLimit { .. }) => return Err(PowertrainError::TowingFullPower),
        Err(e) => return Err(e),
    };
    Ok(fuel_rate(&with_tow, p) - fuel_rate(&base, p))
}
