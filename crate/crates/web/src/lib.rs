//! Browser bindings. Each entry point takes plain values from the page and
//! returns a JSON string with an `svg` to display and a summary.
//!
//! Demo missions are shorter than the full working day (three one-hour
//! repetitions with 45 min breaks) so that a click answers within a
//! couple of seconds on a single thread.

use serde_json::{json, Value};
use trailer_ems::config::Config;
use trailer_ems::cycle::{compose_mission, synthesize_cycle, DriveCycle, Profile};
use trailer_ems::ems::ReactivePolicy;
use trailer_ems::harness::{self, ComparisonReport};
use trailer_ems::simulate::{Control, MissionModel};
use trailer_ems::Result;
use wasm_bindgen::prelude::*;

const DEMO_BASE_S: f64 = 3600.0;
const DEMO_REPEATS: usize = 3;
const DEMO_BREAK_S: f64 = 2700.0;

pub fn demo_mission(profile: Profile, seed: u64) -> Result<DriveCycle> {
    let base = synthesize_cycle(profile, DEMO_BASE_S, seed)?;
    let mut mission = compose_mission(&base, DEMO_REPEATS, DEMO_BREAK_S)?;
    mission.name = profile.as_str().to_string();
    Ok(mission)
}

fn demo_model(profile: &str, seed: u64, cfg: &Config) -> Result<MissionModel> {
    let mission = demo_mission(profile.parse()?, seed)?;
    MissionModel::new(&mission, &cfg.vehicle, &cfg.trailer)
}

pub fn bangbang_json(profile: &str, seed: u64, lower: f64, upper: f64) -> Result<Value> {
    let cfg = Config::default();
    let policy = ReactivePolicy::bang_bang(lower, upper);
    policy.validate(&cfg.trailer.battery)?;
    let model = demo_model(profile, seed, &cfg)?;
    let (trace, result) = model.run(Control::Policy(policy))?;
    let label = format!("bang-bang {:.0}/{:.0} %", lower * 100.0, upper * 100.0);
    let svg = harness::render_soc_plot(&[(label, &trace)], model.soc_floor())?;
    Ok(json!({ "svg": svg, "result": result }))
}

pub fn sweep_json(profile: &str, seed: u64) -> Result<Value> {
    let cfg = Config::default();
    let model = demo_model(profile, seed, &cfg)?;
    let report = harness::threshold_sweep_model(&model, &cfg.sweep)?;
    let svg = harness::render_sweep_heatmap(&report)?;
    let best_fuel = report.best.and_then(|b| {
        report
            .grid
            .iter()
            .find(|c| c.lower == b.lower && c.upper == b.upper)
            .map(|c| c.extra_fuel_l)
    });
    let feasible = report.grid.iter().filter(|c| c.feasible).count();
    Ok(json!({
        "svg": svg,
        "best": report.best,
        "best_extra_fuel_L": best_fuel,
        "cells": report.grid.len(),
        "feasible_cells": feasible,
    }))
}

/// Four-strategy comparison on all three demo missions; the general
/// bang-bang pair is shared between them. Returns the SoC plot of the
/// requested profile and every report.
pub fn compare_json(profile: &str, seed: u64) -> Result<Value> {
    let cfg = Config::default();
    let shown: Profile = profile.parse()?;
    let missions = Profile::ALL
        .iter()
        .map(|&p| demo_mission(p, seed))
        .collect::<Result<Vec<_>>>()?;
    let comparisons =
        harness::compare_strategies(&missions, &cfg.vehicle, &cfg.trailer, &cfg.sweep)?;
    let chosen = comparisons
        .iter()
        .find(|c| c.report.cycle == shown.as_str())
        .expect("every profile is compared");
    let labelled: Vec<(String, _)> = chosen.traces.iter().map(|(n, t)| (n.clone(), t)).collect();
    let svg = harness::render_soc_plot(&labelled, cfg.trailer.battery.soc_floor)?;
    let reports: Vec<&ComparisonReport> = comparisons.iter().map(|c| &c.report).collect();
    Ok(json!({ "svg": svg, "reports": reports }))
}

fn to_js(value: Result<Value>) -> Result<String, JsError> {
    value
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

/// SoC trace of a bang-bang controller with thresholds given as fractions.
#[wasm_bindgen]
pub fn simulate_bangbang(
    profile: &str,
    seed: u32,
    lower: f64,
    upper: f64,
) -> Result<String, JsError> {
    to_js(bangbang_json(profile, u64::from(seed), lower, upper))
}

/// Extra fuel over the whole bang-bang threshold grid.
#[wasm_bindgen]
pub fn sweep_heatmap(profile: &str, seed: u32) -> Result<String, JsError> {
    to_js(sweep_json(profile, u64::from(seed)))
}

#[wasm_bindgen]
pub fn compare(profile: &str, seed: u32) -> Result<String, JsError> {
    to_js(compare_json(profile, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bangbang_returns_plot_and_result() {
        let v = bangbang_json("urban", 1, 0.45, 0.5).unwrap();
        assert!(v["svg"].as_str().unwrap().contains("<polyline"));
        assert!(v["result"]["min_soc"].as_f64().unwrap() > 0.0);
        assert!(v["result"]["feasible"].is_boolean());
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(bangbang_json("urban", 1, 0.5, 0.45).is_err());
        assert!(bangbang_json("suburban", 1, 0.45, 0.5).is_err());
        assert!(sweep_json("nowhere", 1).is_err());
    }

    #[test]
    fn sweep_covers_the_default_grid() {
        let v = sweep_json("longhaul", 2).unwrap();
        assert_eq!(v["cells"], 136);
        let feasible = v["feasible_cells"].as_u64().unwrap();
        assert!(feasible > 0 && feasible <= 136);
        assert!(v["best"]["lower"].as_f64().is_some());
        assert!(v["svg"].as_str().unwrap().contains("class=\"best\""));
    }

    #[test]
    fn compare_orders_strategies_and_is_repeatable() {
        let a = compare_json("regional", 3).unwrap();
        let reports = a["reports"].as_array().unwrap();
        assert_eq!(reports.len(), 3);
        for r in reports {
            let fuel = |k: &str| r["strategies"][k]["extra_fuel_L"].as_f64().unwrap();
            assert!(fuel("global_optimum") <= fuel("optimal_bangbang"));
            assert!(fuel("optimal_bangbang") <= fuel("general_bangbang"));
            assert!(fuel("general_bangbang") <= fuel("constant"));
        }
        assert_eq!(a, compare_json("regional", 3).unwrap());
    }
}
