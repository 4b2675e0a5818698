#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trailer_ems::cycle::{CyclePoint, DriveCycle};
use trailer_ems::ems::ReactivePolicy;
use trailer_ems::powertrain::VehicleParams;
use trailer_ems::simulate::{MissionModel, SimTrace};
use trailer_ems::trailer::{BatteryParams, TrailerParams};

pub const TOY_DT_S: f64 = 60.0;

/// Small battery, start just above the floor: a handful of towing steps
/// decides feasibility, which keeps exhaustive search meaningful.
pub fn toy_trailer(rng: &mut impl Rng) -> TrailerParams {
    TrailerParams {
        battery: BatteryParams {
            capacity_wh: 5000.0,
            soc_init: rng.gen_range(0.205..0.26),
            ..BatteryParams::default()
        },
        ..TrailerParams::default()
    }
}

pub fn toy_cycle(rng: &mut impl Rng, steps: usize) -> DriveCycle {
    let points = (0..steps)
        .map(|k| CyclePoint {
            time_s: k as f64 * TOY_DT_S,
            speed_mps: if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(10.0..25.0)
            },
            grade_pct: rng.gen_range(-1.5..2.5),
        })
        .collect();
    DriveCycle {
        name: "toy".into(),
        dt_s: TOY_DT_S,
        points,
        breaks: Vec::new(),
    }
}

pub struct Toy {
    pub cycle: DriveCycle,
    pub trailer: TrailerParams,
    pub model: MissionModel,
}

/// Random toys (at most `max_steps` steps) that need some towing and that
/// constant towing can complete. Rejected draws are skipped, so the
/// sequence depends only on `seed`.
pub fn feasible_toys(seed: u64, count: usize, max_steps: usize) -> Vec<Toy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vp = VehicleParams::default();
    let mut toys = Vec::with_capacity(count);
    while toys.len() < count {
        let steps = rng.gen_range(6..=max_steps);
        let cycle = toy_cycle(&mut rng, steps);
        let trailer = toy_trailer(&mut rng);
        let model = MissionModel::new(&cycle, &vp, &trailer).expect("toy inputs are valid");
        let idle = model.evaluate(&vec![false; model.len()], &mut Vec::new());
        if !idle.feasible() && model.evaluate_policy(ReactivePolicy::constant()).feasible() {
            toys.push(Toy {
                cycle,
                trailer,
                model,
            });
        }
    }
    toys
}

/// Invariants every simulated trace must satisfy. Returns a description of
/// the first violation.
pub fn trace_violation(
    trace: &SimTrace,
    mission: &DriveCycle,
    tp: &TrailerParams,
) -> Option<String> {
    for (i, s) in trace.steps.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.soc_after) {
            return Some(format!("step {i}: soc {} outside [0, 1]", s.soc_after));
        }
        if s.towing && s.v_mps <= 0.0 {
            return Some(format!("step {i}: towing at standstill"));
        }
        if s.towing && mission.in_break(s.t_s) {
            return Some(format!("step {i}: towing during a break"));
        }
    }
    match trailer_ems::simulate::energy_balance_error(trace, tp) {
        Some(err) if err < 1e-9 => None,
        Some(err) => Some(format!("energy balance closure error {err:e}")),
        None => None,
    }
}
