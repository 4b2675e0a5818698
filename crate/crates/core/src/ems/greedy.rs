//! Iterative "tow where it is cheapest" optimizer.
//!
//! Simulate; at the first step where SoC falls under the floor, switch on
//! towing at the most efficient admissible steps up to and including that
//! step (efficiency = electrical energy gained per liter of extra fuel) until
//! the projected shortfall is covered; repeat until the run is feasible.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cycle::DriveCycle;
use crate::error::{Error, Result};
use crate::powertrain::VehicleParams;
use crate::simulate::{Control, MissionModel, StrategyResult, TowingSchedule};
use crate::trailer::TrailerParams;

const J_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEntry {
    pub step_index: usize,
    /// Electrical energy produced by towing over this step.
    pub delta_e_kwh: f64,
    /// Marginal fuel of towing over this step.
    pub delta_fuel_l: f64,
    pub efficiency_kwh_per_l: f64,
}

impl EfficiencyEntry {
    pub fn new(step_index: usize, delta_e_kwh: f64, delta_fuel_l: f64) -> Self {
        Self {
            step_index,
            delta_e_kwh,
            delta_fuel_l,
            efficiency_kwh_per_l: delta_e_kwh / delta_fuel_l,
        }
    }
}

/// Ranking order: higher efficiency first, earlier step on ties.
pub fn efficiency_order(a: &EfficiencyEntry, b: &EfficiencyEntry) -> Ordering {
    b.efficiency_kwh_per_l
        .total_cmp(&a.efficiency_kwh_per_l)
        .then(a.step_index.cmp(&b.step_index))
}

fn entry_for(model: &MissionModel, i: usize) -> Option<EfficiencyEntry> {
    let tow = model.steps[i].tow?;
    if tow.fuel_extra_l <= 0.0 {
        return None;
    }
    Some(EfficiencyEntry::new(
        i,
        tow.p_elec_w * model.dt_s / J_PER_KWH,
        tow.fuel_extra_l,
    ))
}

/// Candidates for the next activation under `schedule`: admissible, not yet
/// active steps with index `< horizon`, best first. `soc_after` is the SoC
/// trace of `schedule`.
pub fn rank_efficiency_model(
    model: &MissionModel,
    schedule: &[bool],
    soc_after: &[f64],
    horizon: usize,
) -> Vec<EfficiencyEntry> {
    let horizon = horizon.min(model.len());
    let mut entries: Vec<EfficiencyEntry> = (0..horizon)
        .filter(|&i| !schedule[i])
        .filter(|&i| {
            let soc = if i == 0 {
                model.soc_init()
            } else {
                soc_after[i - 1]
            };
            model.admissible(i, soc)
        })
        .filter_map(|i| entry_for(model, i))
        .collect();
    entries.sort_by(efficiency_order);
    entries
}

/// Simulates `schedule` on `mission` and ranks the candidates before `horizon`.
pub fn rank_efficiency(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
    schedule: &TowingSchedule,
    horizon: usize,
) -> Result<Vec<EfficiencyEntry>> {
    let model = MissionModel::new(mission, vp, tp)?;
    if schedule.len() != model.len() {
        return Err(Error::invalid("schedule length does not match mission"));
    }
    let mut soc = Vec::new();
    model.evaluate(&schedule.active, &mut soc);
    Ok(rank_efficiency_model(
        &model,
        &schedule.active,
        &soc,
        horizon,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub schedule: TowingSchedule,
    pub result: StrategyResult,
    pub iterations: usize,
    /// Steps switched on in each iteration, in activation order.
    pub batches: Vec<Vec<usize>>,
}

pub fn greedy_optimize(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
) -> Result<GreedyOutcome> {
    greedy_optimize_model(&MissionModel::new(mission, vp, tp)?, None)
}

/// Greedy optimizer on a prepared model. `max_iterations` defaults to the
/// number of mission steps.
pub fn greedy_optimize_model(
    model: &MissionModel,
    max_iterations: Option<usize>,
) -> Result<GreedyOutcome> {
    let n = model.len();
    let b = &model.trailer.battery;
    let floor = b.soc_floor;
    let mut soc = Vec::with_capacity(n);

    let constant = vec![true; n];
    if !model.evaluate(&constant, &mut soc).feasible() {
        return Err(Error::Infeasible(format!(
            "mission `{}` is infeasible even with maximal towing",
            model.name
        )));
    }

    // Efficiencies do not depend on the schedule, so rank once and filter
    // per iteration; this yields the same order as re-ranking.
    let mut order: Vec<EfficiencyEntry> = (0..n).filter_map(|i| entry_for(model, i)).collect();
    order.sort_by(efficiency_order);

    let cap = max_iterations.unwrap_or(n).max(1);
    let mut active = vec![false; n];
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut skip = 0usize;

    loop {
        let eval = model.evaluate(&active, &mut soc);
        let Some(h) = eval.first_violation else {
            break;
        };
        if batches.len() >= cap {
            return Err(Error::Unsatisfiable(format!(
                "greedy optimizer hit its iteration cap ({cap})"
            )));
        }
        // Shortfall at the first violation, converted to charging energy.
        let deficit_j = (floor - soc[h]) * b.capacity_j();
        let mut covered_j = 0.0;
        let mut batch = Vec::new();
        while skip < order.len() && active[order[skip].step_index] {
            skip += 1;
        }
        for e in &order[skip..] {
            let i = e.step_index;
            if i > h || active[i] {
                continue;
            }
            let soc_before = if i == 0 { model.soc_init() } else { soc[i - 1] };
            if !model.admissible(i, soc_before) {
                continue;
            }
            active[i] = true;
            batch.push(i);
            covered_j += e.delta_e_kwh * J_PER_KWH * b.eta_charge;
            if covered_j >= deficit_j {
                break;
            }
        }
        if batch.is_empty() {
            return Err(Error::Unsatisfiable(format!(
                "no admissible towing step left before step {h} of `{}`",
                model.name
            )));
        }
        batches.push(batch);
    }

    let schedule = TowingSchedule { active };
    let (_, result) = model.run(Control::Schedule(&schedule))?;
    Ok(GreedyOutcome {
        schedule,
        result,
        iterations: batches.len(),
        batches,
    })
}
