//! Coupled truck + trailer simulation over a mission.
//!
//! Everything that does not depend on the battery state (forces, base fuel,
//! towing option and its marginal fuel) is computed once per mission in a
//! [`MissionModel`]. Running a schedule or a policy is then a cheap forward
//! recursion over the SoC, which is what the optimizers rely on.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cycle::{step_accel, DriveCycle};
use crate::ems::{policy_step, ReactivePolicy};
use crate::error::{Error, Result};
use crate::powertrain::{
    fuel_rate, marginal_towing_fuel, operating_point, traction_force, OperatingPoint,
    PowertrainError, VehicleParams,
};
use crate::trailer::{
    battery_step, charge_acceptance_w, recuperation_power, towing_force_max, BatteryState,
    TrailerParams,
};

pub const TRACE_CSV_HEADER: &str = "t_s,v_mps,f_req_n,towing,recup,fuel_L,fuel_extra_L,soc";
pub const SCHEDULE_CSV_HEADER: &str = "step,active";

const J_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowingSchedule {
    pub active: Vec<bool>,
}

impl TowingSchedule {
    pub fn none(len: usize) -> Self {
        Self {
            active: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.active.len() * 8);
        out.push_str(SCHEDULE_CSV_HEADER);
        out.push('\n');
        for (i, a) in self.active.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", u8::from(*a));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != SCHEDULE_CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{SCHEDULE_CSV_HEADER}`"),
            });
        }
        let mut active = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |m: String| Error::Parse { line, message: m };
            if record.len() != 2 {
                return Err(bad(format!("expected 2 fields, got {}", record.len())));
            }
            let step: usize = record[0]
                .parse()
                .map_err(|_| bad(format!("bad step index `{}`", &record[0])))?;
            if step != active.len() {
                return Err(bad(format!("expected step {}, got {step}", active.len())));
            }
            let flag = match &record[1] {
                "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(bad(format!("bad active flag `{other}`"))),
            };
            active.push(flag);
        }
        Ok(Self { active })
    }
}

#[derive(Debug, Clone)]
pub enum Control<'a> {
    Schedule(&'a TowingSchedule),
    Policy(ReactivePolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t_s: f64,
    pub v_mps: f64,
    pub f_req_n: f64,
    pub towing: bool,
    pub recup: bool,
    /// Electrical towing power accepted by the battery terminals.
    pub p_tow_elec_w: f64,
    /// Electrical recuperation power accepted by the battery terminals.
    pub p_recup_elec_w: f64,
    pub fuel_l: f64,
    pub fuel_extra_l: f64,
    pub soc_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub name: String,
    pub dt_s: f64,
    pub soc_init: f64,
    pub p_load_w: f64,
    pub steps: Vec<StepRecord>,
}

impl SimTrace {
    pub fn soc(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.soc_after)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.steps.len() * 64);
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.t_s,
                s.v_mps,
                s.f_req_n,
                u8::from(s.towing),
                u8::from(s.recup),
                s.fuel_l,
                s.fuel_extra_l,
                s.soc_after
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub total_fuel_l: f64,
    /// Fuel attributable to towing, relative to never towing on the same mission.
    pub extra_fuel_l: f64,
    pub towing_energy_kwh: f64,
    pub recup_energy_kwh: f64,
    pub min_soc: f64,
    pub final_soc: f64,
    pub feasible: bool,
    pub depleted: bool,
    pub towing_steps: usize,
    /// Scheduled tows that were not admissible and were dropped.
    pub demoted_steps: usize,
}

/// Accessor used by reports: the towing-attributable fuel of a run.
pub fn extra_fuel(result: &StrategyResult) -> f64 {
    result.extra_fuel_l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowOption {
    pub p_mech_w: f64,
    pub p_elec_w: f64,
    /// Marginal fuel of towing over this step, liters.
    pub fuel_extra_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepModel {
    pub t_s: f64,
    pub v_mps: f64,
    pub f_req_n: f64,
    pub moving: bool,
    /// Fuel over this step without towing, liters.
    pub fuel_base_l: f64,
    /// `None` when towing is physically impossible here regardless of SoC
    /// (standstill, braking, break, or no engine headroom).
    pub tow: Option<TowOption>,
    /// The base demand alone exceeds the engine envelope; fuel is evaluated
    /// at the torque limit.
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub soc: f64,
    pub towing: bool,
    pub recup: bool,
    pub p_tow_elec_w: f64,
    pub p_recup_elec_w: f64,
    pub fuel_extra_l: f64,
    pub depleted: bool,
}

/// Summary of a lean schedule evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub extra_fuel_l: f64,
    pub min_soc: f64,
    pub first_violation: Option<usize>,
    pub demoted_steps: usize,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.first_violation.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct MissionModel {
    pub name: String,
    pub dt_s: f64,
    pub trailer: TrailerParams,
    pub steps: Vec<StepModel>,
}

impl MissionModel {
    pub fn new(mission: &DriveCycle, vp: &VehicleParams, tp: &TrailerParams) -> Result<Self> {
        vp.validate().map_err(Error::InvalidInput)?;
        tp.validate().map_err(Error::InvalidInput)?;
        if mission.is_empty() {
            return Err(Error::invalid("mission has no steps"));
        }
        if !mission.is_uniform() {
            return Err(Error::invalid(format!(
                "mission `{}` is not uniformly sampled at dt = {} s; resample it first",
                mission.name, mission.dt_s
            )));
        }
        let dt = mission.dt_s;
        let breaks = mission.break_mask();
        let mut steps = Vec::with_capacity(mission.len());
        for (i, p) in mission.points.iter().enumerate() {
            let v = p.speed_mps;
            let f_req = traction_force(v, step_accel(mission, i), p.grade_pct, vp);
            let moving = v > 0.0;
            let mut step = StepModel {
                t_s: p.time_s,
                v_mps: v,
                f_req_n: f_req,
                moving,
                fuel_base_l: vp.idle_fuel_lps * dt,
                tow: None,
                saturated: false,
            };
            if moving && f_req >= 0.0 && !breaks[i] {
                match operating_point(f_req, v, vp) {
                    Ok(op) => {
                        step.fuel_base_l = fuel_rate(&op, vp) * dt;
                        let f_tow = towing_force_max(v, tp);
                        match marginal_towing_fuel(f_req, f_tow, v, vp) {
                            Ok(m) => {
                                let p_mech = f_tow * v;
                                step.tow = Some(TowOption {
                                    p_mech_w: p_mech,
                                    p_elec_w: tp.eta_gen * p_mech,
                                    fuel_extra_l: m * dt,
                                });
                            }
                            Err(PowertrainError::TowingFullPower) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                    Err(PowertrainError::TorqueLimit { limit_nm, rpm, .. }) => {
                        let gear = crate::powertrain::select_gear(v, vp)?;
                        let op = OperatingPoint {
                            rpm,
                            torque_nm: limit_nm,
                            gear_index: gear,
                        };
                        step.fuel_base_l = fuel_rate(&op, vp) * dt;
                        step.saturated = true;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            steps.push(step);
        }
        Ok(Self {
            name: mission.name.clone(),
            dt_s: dt,
            trailer: tp.clone(),
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn soc_init(&self) -> f64 {
        self.trailer.battery.soc_init
    }

    pub fn soc_floor(&self) -> f64 {
        self.trailer.battery.soc_floor
    }

    /// Towing is admissible at step `i` when the axle can tow there and the
    /// battery is below its cap.
    pub fn admissible(&self, i: usize, soc: f64) -> bool {
        self.steps[i].tow.is_some() && soc < self.trailer.battery.soc_cap
    }

    /// Battery and fuel bookkeeping for one step starting at `soc`.
    pub fn advance(&self, i: usize, soc: f64, tow: bool) -> Advance {
        let s = &self.steps[i];
        let tp = &self.trailer;
        let b = &tp.battery;
        let state = BatteryState { soc };
        let mut out = Advance {
            soc,
            towing: false,
            recup: false,
            p_tow_elec_w: 0.0,
            p_recup_elec_w: 0.0,
            fuel_extra_l: 0.0,
            depleted: false,
        };
        if s.moving && s.f_req_n < 0.0 {
            if let Ok(r) = recuperation_power(s.f_req_n, s.v_mps, state, tp, self.dt_s) {
                out.p_recup_elec_w = r.p_elec_w;
                out.recup = r.p_mech_w > 0.0;
            }
        } else if tow && soc < b.soc_cap {
            if let Some(t) = s.tow {
                out.towing = true;
                out.p_tow_elec_w = charge_acceptance_w(state, t.p_elec_w, b, self.dt_s);
                out.fuel_extra_l = t.fuel_extra_l;
            }
        }
        let next = battery_step(
            state,
            out.p_tow_elec_w + out.p_recup_elec_w,
            tp.p_tru_w,
            self.dt_s,
            b,
        );
        out.soc = next.state.soc;
        out.depleted = next.depleted;
        out
    }

    /// Runs a schedule without building a trace. `soc_after` receives the SoC
    /// at the end of every step.
    pub fn evaluate(&self, schedule: &[bool], soc_after: &mut Vec<f64>) -> Evaluation {
        debug_assert_eq!(schedule.len(), self.len());
        self.evaluate_with(|i, _, _, _| schedule[i], soc_after)
    }

    /// Runs a reactive policy without building a trace.
    pub fn evaluate_policy(&self, mut policy: ReactivePolicy) -> Evaluation {
        let mut soc = Vec::with_capacity(self.len());
        self.evaluate_with(
            |_, soc, moving, admissible| policy_step(&mut policy, soc, moving, admissible),
            &mut soc,
        )
    }

    /// Lean forward run. `decide(step, soc, moving, admissible)` returns
    /// whether towing is requested.
    pub fn evaluate_with<F>(&self, mut decide: F, soc_after: &mut Vec<f64>) -> Evaluation
    where
        F: FnMut(usize, f64, bool, bool) -> bool,
    {
        soc_after.clear();
        let floor = self.soc_floor();
        let mut soc = self.soc_init();
        let mut eval = Evaluation {
            extra_fuel_l: 0.0,
            min_soc: soc,
            first_violation: None,
            demoted_steps: 0,
        };
        for (i, s) in self.steps.iter().enumerate() {
            let admissible = self.admissible(i, soc);
            let want = decide(i, soc, s.moving, admissible);
            if want && !admissible {
                eval.demoted_steps += 1;
            }
            let adv = self.advance(i, soc, want && admissible);
            soc = adv.soc;
            eval.extra_fuel_l += adv.fuel_extra_l;
            eval.min_soc = eval.min_soc.min(soc);
            if soc < floor && eval.first_violation.is_none() {
                eval.first_violation = Some(i);
            }
            soc_after.push(soc);
        }
        eval
    }

    pub fn run(&self, control: Control<'_>) -> Result<(SimTrace, StrategyResult)> {
        let n = self.len();
        let mut policy = match &control {
            Control::Schedule(s) => {
                if s.len() != n {
                    return Err(Error::invalid(format!(
                        "schedule has {} steps, mission has {n}",
                        s.len()
                    )));
                }
                None
            }
            Control::Policy(p) => Some(p.clone()),
        };
        let b = &self.trailer.battery;
        let dt = self.dt_s;
        let mut soc = b.soc_init;
        let mut steps = Vec::with_capacity(n);
        let mut res = StrategyResult {
            total_fuel_l: 0.0,
            extra_fuel_l: 0.0,
            towing_energy_kwh: 0.0,
            recup_energy_kwh: 0.0,
            min_soc: soc,
            final_soc: soc,
            feasible: true,
            depleted: false,
            towing_steps: 0,
            demoted_steps: 0,
        };
        for (i, s) in self.steps.iter().enumerate() {
            let admissible = self.admissible(i, soc);
            let want = match (&control, policy.as_mut()) {
                (Control::Schedule(sch), _) => sch.active[i],
                (Control::Policy(_), Some(p)) => policy_step(p, soc, s.moving, admissible),
                (Control::Policy(_), None) => unreachable!(),
            };
            if want && !admissible {
                res.demoted_steps += 1;
            }
            let adv = self.advance(i, soc, want && admissible);
            soc = adv.soc;
            res.total_fuel_l += s.fuel_base_l + adv.fuel_extra_l;
            res.extra_fuel_l += adv.fuel_extra_l;
            res.towing_energy_kwh += adv.p_tow_elec_w * dt / J_PER_KWH;
            res.recup_energy_kwh += adv.p_recup_elec_w * dt / J_PER_KWH;
            res.min_soc = res.min_soc.min(soc);
            res.depleted |= adv.depleted;
            res.towing_steps += usize::from(adv.towing);
            steps.push(StepRecord {
                t_s: s.t_s,
                v_mps: s.v_mps,
                f_req_n: s.f_req_n,
                towing: adv.towing,
                recup: adv.recup,
                p_tow_elec_w: adv.p_tow_elec_w,
                p_recup_elec_w: adv.p_recup_elec_w,
                fuel_l: s.fuel_base_l + adv.fuel_extra_l,
                fuel_extra_l: adv.fuel_extra_l,
                soc_after: soc,
            });
        }
        res.final_soc = soc;
        res.feasible = res.min_soc >= b.soc_floor;
        let trace = SimTrace {
            name: self.name.clone(),
            dt_s: dt,
            soc_init: b.soc_init,
            p_load_w: self.trailer.p_tru_w,
            steps,
        };
        Ok((trace, res))
    }
}

/// Simulates `mission` under a towing schedule or a reactive policy.
pub fn simulate(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
    control: Control<'_>,
) -> Result<(SimTrace, StrategyResult)> {
    MissionModel::new(mission, vp, tp)?.run(control)
}

/// Relative closure error of the battery energy balance over a trace:
/// `|Δsoc - Σ(η_c·P_chg - P_load/η_d)·dt / E| / Σ|terms|`. Returns `None`
/// when the trace hit a clamping event (SoC at 0), where closure does not apply.
pub fn energy_balance_error(trace: &SimTrace, tp: &TrailerParams) -> Option<f64> {
    let b = &tp.battery;
    let e = b.capacity_j();
    let mut predicted = 0.0;
    let mut magnitude = 0.0;
    for s in &trace.steps {
        if s.soc_after <= 0.0 {
            return None;
        }
        let gain = (s.p_tow_elec_w + s.p_recup_elec_w) * b.eta_charge * trace.dt_s / e;
        let loss = trace.p_load_w / b.eta_discharge * trace.dt_s / e;
        predicted += gain - loss;
        magnitude += gain + loss;
    }
    let actual = trace.steps.last().map_or(0.0, |s| s.soc_after) - trace.soc_init;
    Some((actual - predicted).abs() / magnitude.max(f64::MIN_POSITIVE))
}
