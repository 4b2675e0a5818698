//! Electrified trailer: generator axle, traction battery and the
//! refrigeration unit's constant electrical draw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const J_PER_WH: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryParams {
    pub capacity_wh: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_init: f64,
    pub soc_floor: f64,
    pub soc_cap: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            capacity_wh: 20_000.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            soc_init: 0.90,
            soc_floor: 0.20,
            soc_cap: 1.00,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.capacity_wh > 0.0) {
            return Err("capacity_wh must be positive".into());
        }
        for (name, eta) in [
            ("eta_charge", self.eta_charge),
            ("eta_discharge", self.eta_discharge),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(format!("{name} must lie in (0, 1]"));
            }
        }
        if !(0.0 <= self.soc_floor
            && self.soc_floor < self.soc_init
            && self.soc_init <= self.soc_cap
            && self.soc_cap <= 1.0)
        {
            return Err("need 0 <= soc_floor < soc_init <= soc_cap <= 1".into());
        }
        Ok(())
    }

    pub fn capacity_j(&self) -> f64 {
        self.capacity_wh * J_PER_WH
    }

    pub fn capacity_kwh(&self) -> f64 {
        self.capacity_wh / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrailerParams {
    /// Total electrical rating of the generator axle.
    pub p_gen_rated_w: f64,
    /// Axle force available up to `v_base_mps`.
    pub f_tow_max_n: f64,
    pub v_base_mps: f64,
    pub eta_gen: f64,
    pub p_tru_w: f64,
    pub battery: BatteryParams,
}

impl Default for TrailerParams {
    fn default() -> Self {
        Self {
            p_gen_rated_w: 30_000.0,
            f_tow_max_n: 3600.0,
            v_base_mps: 8.33,
            eta_gen: 0.90,
            p_tru_w: 7000.0,
            battery: BatteryParams::default(),
        }
    }
}

impl TrailerParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.p_gen_rated_w,
            self.f_tow_max_n,
            self.v_base_mps,
            self.p_tru_w,
        ];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err("trailer parameters must be positive".into());
        }
        if !(self.eta_gen > 0.0 && self.eta_gen <= 1.0) {
            return Err("eta_gen must lie in (0, 1]".into());
        }
        // The force envelope may not ask more mechanical power than the machines are rated for.
        if self.f_tow_max_n * self.v_base_mps > self.p_gen_rated_w * 1.01 {
            return Err("f_tow_max_n * v_base_mps exceeds p_gen_rated_w".into());
        }
        self.battery.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub state: BatteryState,
    /// The energy balance asked for a negative SoC; the state was clamped to 0.
    pub depleted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecupPower {
    pub p_elec_w: f64,
    pub p_mech_w: f64,
}

/// Generator axle force envelope: constant force up to the base speed, then
/// constant mechanical power.
pub fn towing_force_max(v_mps: f64, p: &TrailerParams) -> f64 {
    if v_mps <= 0.0 {
        0.0
    } else if v_mps <= p.v_base_mps {
        p.f_tow_max_n
    } else {
        p.f_tow_max_n * p.v_base_mps / v_mps
    }
}

/// Largest mechanical power that can be fed in during `dt_s` without pushing
/// SoC past the cap.
fn headroom_mech_w(state: BatteryState, p: &TrailerParams, dt_s: f64) -> f64 {
    let b = &p.battery;
    let room = (b.soc_cap - state.soc).max(0.0) * b.capacity_j();
    room / (p.eta_gen * b.eta_charge * dt_s)
}

/// Power recovered from a braking demand `f_req_n < 0`. Whatever the axle
/// cannot take goes to the friction brakes.
pub fn recuperation_power(
    f_req_n: f64,
    v_mps: f64,
    state: BatteryState,
    p: &TrailerParams,
    dt_s: f64,
) -> Result<RecupPower> {
    if f_req_n >= 0.0 {
        return Err(Error::invalid(
            "recuperation needs a braking demand (f_req < 0)",
        ));
    }
    if !(v_mps > 0.0) {
        return Err(Error::invalid("recuperation needs a moving vehicle"));
    }
    let force = (-f_req_n).min(towing_force_max(v_mps, p));
    let p_mech = (force * v_mps).min(headroom_mech_w(state, p, dt_s));
    Ok(RecupPower {
        p_elec_w: p.eta_gen * p_mech,
        p_mech_w: p_mech,
    })
}

/// Electrical charging power (before charge losses) the battery accepts
/// during `dt_s` without exceeding the cap.
pub fn charge_acceptance_w(
    state: BatteryState,
    p_elec_w: f64,
    b: &BatteryParams,
    dt_s: f64,
) -> f64 {
    let room = (b.soc_cap - state.soc).max(0.0) * b.capacity_j();
    p_elec_w.min(room / (b.eta_charge * dt_s))
}

/// One coulometric update of the battery.
pub fn battery_step(
    state: BatteryState,
    p_charge_w: f64,
    p_load_w: f64,
    dt_s: f64,
    p: &BatteryParams,
) -> BatteryStep {
    debug_assert!(p_charge_w >= 0.0 && p_load_w >= 0.0);
    let net_w = p_charge_w * p.eta_charge - p_load_w / p.eta_discharge;
    let soc = state.soc + net_w * dt_s / p.capacity_j();
    if soc < 0.0 {
        BatteryStep {
            state: BatteryState { soc: 0.0 },
            depleted: true,
        }
    } else {
        BatteryStep {
            state: BatteryState { soc: soc.min(1.0) },
            depleted: false,
        }
    }
}
