//! Optimality oracles for small missions: full enumeration and a backward
//! dynamic program over a discretized SoC grid.

use std::cmp::Ordering;

use crate::cycle::DriveCycle;
use crate::error::{Error, Result};
use crate::powertrain::VehicleParams;
use crate::simulate::{MissionModel, TowingSchedule};
use crate::trailer::TrailerParams;

pub const MAX_EXHAUSTIVE_STEPS: usize = 22;

pub fn exhaustive_optimize(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
) -> Result<TowingSchedule> {
    exhaustive_optimize_model(&MissionModel::new(mission, vp, tp)?)
}

#[derive(Debug, Clone)]
struct Best {
    fuel: f64,
    schedule: Vec<bool>,
}

fn better(a: &Best, b: &Best) -> bool {
    match a.fuel.total_cmp(&b.fuel) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.schedule < b.schedule,
    }
}

/// Minimum extra fuel over every schedule; ties go to the lexicographically
/// smallest schedule. Steps where towing can never happen are left off,
/// which is what the tie rule would pick anyway.
pub fn exhaustive_optimize_model(model: &MissionModel) -> Result<TowingSchedule> {
    let n = model.len();
    if n > MAX_EXHAUSTIVE_STEPS {
        return Err(Error::invalid(format!(
            "exhaustive search is limited to {MAX_EXHAUSTIVE_STEPS} steps (mission has {n})"
        )));
    }
    let candidates: Vec<usize> = (0..n).filter(|&i| model.steps[i].tow.is_some()).collect();
    let k = candidates.len();
    let total: u64 = 1 << k;
    let chunk = 1u64 << k.saturating_sub(6);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();

    let search = |&start: &u64| -> Option<Best> {
        let mut soc = Vec::with_capacity(n);
        let mut schedule = vec![false; n];
        let mut best: Option<Best> = None;
        for mask in start..(start + chunk).min(total) {
            for (bit, &i) in candidates.iter().enumerate() {
                schedule[i] = mask >> bit & 1 == 1;
            }
            let eval = model.evaluate(&schedule, &mut soc);
            if !eval.feasible() {
                continue;
            }
            let cand = Best {
                fuel: eval.extra_fuel_l,
                schedule: schedule.clone(),
            };
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        best
    };

    crate::par::map(&starts, search)
        .into_iter()
        .flatten()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .map(|b| TowingSchedule { active: b.schedule })
        .ok_or_else(|| Error::Unsatisfiable(format!("no feasible schedule for `{}`", model.name)))
}

pub fn dp_optimize(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
    soc_grid_step: f64,
) -> Result<TowingSchedule> {
    dp_optimize_model(&MissionModel::new(mission, vp, tp)?, soc_grid_step)
}

/// Slack for comparing grid points with simulated SoC values that should
/// coincide but went through different floating-point operations.
const SOC_EPS: f64 = 1e-12;

/// SoC grid that drifts down by the refrigeration load's per-step drain.
/// A step without charging maps grid points onto grid points, so rounding
/// only happens on steps that charge the battery. Index `j` at step `t`
/// stands for `origin + j·step - t·drift`; the grid passes through the
/// initial SoC.
struct Grid {
    step: f64,
    origin: f64,
    drift: f64,
    floor: f64,
    /// Cells per step window.
    width: usize,
}

impl Grid {
    fn value(&self, t: usize, j: i64) -> f64 {
        self.origin + j as f64 * self.step - t as f64 * self.drift
    }

    /// Largest grid index at step `t` whose value is not above `soc`.
    fn index_down(&self, t: usize, soc: f64) -> i64 {
        let x = (soc - self.origin + t as f64 * self.drift) / self.step;
        let mut j = (x + 1e-6).floor() as i64;
        while self.value(t, j) > soc + SOC_EPS {
            j -= 1;
        }
        j
    }

    /// Lowest index at step `t` that is not below the floor.
    fn lowest(&self, t: usize) -> i64 {
        let mut j = self.index_down(t, self.floor);
        while self.value(t, j) < self.floor - SOC_EPS {
            j += 1;
        }
        j
    }
}

/// Backward value iteration over (step, SoC cell) with a binary tow action.
/// Transitions use the exact step physics from each grid point; successor
/// SoCs are rounded down to the grid, which keeps the DP conservative with
/// respect to the floor. The schedule is recovered by a forward pass on the
/// exact SoC.
pub fn dp_optimize_model(model: &MissionModel, soc_grid_step: f64) -> Result<TowingSchedule> {
    if !(1e-4..=1e-2).contains(&soc_grid_step) {
        return Err(Error::invalid("soc_grid_step must lie in [1e-4, 1e-2]"));
    }
    let n = model.len();
    let tp = &model.trailer;
    let b = &tp.battery;
    let floor = b.soc_floor;
    let grid = Grid {
        step: soc_grid_step,
        origin: b.soc_init,
        drift: tp.p_tru_w / b.eta_discharge * model.dt_s / b.capacity_j(),
        floor,
        width: ((b.soc_cap - floor) / soc_grid_step).floor() as usize + 2,
    };
    let m = grid.width;
    let lowest: Vec<i64> = (0..=n).map(|t| grid.lowest(t)).collect();
    let slot = |t: usize, soc: f64| -> Option<usize> {
        usize::try_from(grid.index_down(t, soc) - lowest[t])
            .ok()
            .filter(|&w| w < m)
    };

    // Cost-to-go of one action from `soc` at step `t`, given the values of step t + 1.
    let transition = |t: usize, soc: f64, tow: bool, value_next: &[f64]| -> f64 {
        let adv = model.advance(t, soc, tow);
        if adv.depleted || adv.soc < floor {
            return f64::INFINITY;
        }
        slot(t + 1, adv.soc).map_or(f64::INFINITY, |w| adv.fuel_extra_l + value_next[w])
    };

    let mut value_next = vec![0.0_f64; m];
    let mut value = vec![f64::INFINITY; m];
    let mut values: Vec<Vec<f64>> = Vec::new();
    let keep_values = n * m <= 1 << 22;
    let mut decisions = vec![false; n * m];
    for t in (0..n).rev() {
        for w in 0..m {
            let soc = grid.value(t, lowest[t] + w as i64);
            if soc > b.soc_cap + SOC_EPS {
                value[w] = f64::INFINITY;
                continue;
            }
            let idle = transition(t, soc, false, &value_next);
            let towed = if model.admissible(t, soc) {
                transition(t, soc, true, &value_next)
            } else {
                f64::INFINITY
            };
            let act = towed < idle;
            value[w] = if act { towed } else { idle };
            decisions[t * m + w] = act;
        }
        if keep_values {
            values.push(value_next.clone());
        }
        std::mem::swap(&mut value, &mut value_next);
    }
    values.reverse();

    if slot(0, b.soc_init).is_none_or(|w| !value_next[w].is_finite()) {
        return Err(Error::Unsatisfiable(format!(
            "no feasible towing policy on a {soc_grid_step} SoC grid for `{}`",
            model.name
        )));
    }
    let mut active = vec![false; n];
    let mut soc = b.soc_init;
    for (t, slot_t) in active.iter_mut().enumerate() {
        let act = if keep_values {
            // one-step lookahead from the exact state
            let next = &values[t];
            model.admissible(t, soc)
                && transition(t, soc, true, next) < transition(t, soc, false, next)
        } else {
            slot(t, soc).is_some_and(|w| decisions[t * m + w]) && model.admissible(t, soc)
        };
        *slot_t = act;
        soc = model.advance(t, soc, act).soc;
    }
    Ok(TowingSchedule { active })
}

/// Fuel needed to buy one SoC grid step at the least efficient towing step
/// of the mission; the comparison tolerance between DP and exact optima.
pub fn dp_fuel_tolerance(model: &MissionModel, soc_grid_step: f64) -> f64 {
    let b = &model.trailer.battery;
    let worst_l_per_j = model
        .steps
        .iter()
        .filter_map(|s| s.tow)
        .map(|t| t.fuel_extra_l / (t.p_elec_w * model.dt_s * b.eta_charge))
        .fold(0.0_f64, f64::max);
    soc_grid_step * b.capacity_j() * worst_l_per_j
}
