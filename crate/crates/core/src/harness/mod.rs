//! Experiment orchestration: bang-bang threshold sweeps, the four-strategy
//! comparison, and report/plot output.

mod report;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{comparison_to_csv, fmt_sig6, sweep_to_csv, to_json};
pub use svg::{render_soc_plot, render_sweep_heatmap};

use crate::config::{SimConfig, SweepConfig};
use crate::cycle::{compose_mission, resample, synthesize_cycle, DriveCycle, Profile};
use crate::ems::{greedy_optimize_model, ReactivePolicy};
use crate::error::{Error, Result};
use crate::powertrain::VehicleParams;
use crate::simulate::{Control, MissionModel, SimTrace, StrategyResult};
use crate::trailer::{BatteryParams, TrailerParams};

pub const CONSTANT: &str = "constant";
pub const GENERAL_BANGBANG: &str = "general_bangbang";
pub const OPTIMAL_BANGBANG: &str = "optimal_bangbang";
pub const GLOBAL_OPTIMUM: &str = "global_optimum";
pub const STRATEGIES: [&str; 4] = [CONSTANT, GENERAL_BANGBANG, OPTIMAL_BANGBANG, GLOBAL_OPTIMUM];

/// Length of one synthetic base cycle before repetition.
pub fn base_cycle_duration_s(profile: Profile) -> f64 {
    match profile {
        Profile::Urban => 7200.0,
        Profile::Regional => 7200.0,
        Profile::Longhaul => 7200.0,
    }
}

/// The default working-day mission for a profile: a synthetic base cycle
/// repeated with loading breaks in between.
pub fn shipped_mission(profile: Profile, seed: u64, sim: &SimConfig) -> Result<DriveCycle> {
    let base = synthesize_cycle(profile, base_cycle_duration_s(profile), seed)?;
    let base = if (sim.dt_s - base.dt_s).abs() > 1e-12 {
        resample(&base, sim.dt_s)?
    } else {
        base
    };
    let mut mission = compose_mission(&base, sim.repeats, sim.break_s)?;
    mission.name = profile.as_str().to_string();
    Ok(mission)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "extra_fuel_L")]
    pub extra_fuel_l: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cycle: String,
    pub grid: Vec<SweepCell>,
    pub best: Option<ThresholdPair>,
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn grid_index(x: f64, step: f64) -> Result<i64> {
    let k = (x / step).round();
    if (k * step - x).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "grid step {step} does not divide {x}"
        )));
    }
    Ok(k as i64)
}

/// All (lower, upper) pairs with lower < upper on the configured grid,
/// ordered by lower then upper.
pub fn threshold_pairs(cfg: &SweepConfig, battery: &BatteryParams) -> Result<Vec<ThresholdPair>> {
    let step = cfg.grid_step;
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::invalid("grid_step must lie in (0, 1)"));
    }
    for (name, [lo, hi]) in [
        ("lower_range", cfg.lower_range),
        ("upper_range", cfg.upper_range),
    ] {
        if !(lo <= hi && lo >= battery.soc_floor - 1e-12 && hi <= battery.soc_cap + 1e-12) {
            return Err(Error::invalid(format!(
                "{name} [{lo}, {hi}] must lie within [soc_floor, soc_cap]"
            )));
        }
    }
    let (l0, l1) = (
        grid_index(cfg.lower_range[0], step)?,
        grid_index(cfg.lower_range[1], step)?,
    );
    let (u0, u1) = (
        grid_index(cfg.upper_range[0], step)?,
        grid_index(cfg.upper_range[1], step)?,
    );
    let mut pairs = Vec::new();
    for l in l0..=l1 {
        for u in u0.max(l + 1)..=u1 {
            pairs.push(ThresholdPair {
                lower: snap(l as f64 * step),
                upper: snap(u as f64 * step),
            });
        }
    }
    Ok(pairs)
}

/// `a` is a better threshold pair than `b` at equal cost when its lower
/// bound is higher, then when its upper bound is lower.
fn prefer_on_tie(a: &ThresholdPair, b: &ThresholdPair) -> bool {
    a.lower > b.lower || (a.lower == b.lower && a.upper < b.upper)
}

fn pick_best<'a>(cells: impl Iterator<Item = (ThresholdPair, f64)> + 'a) -> Option<ThresholdPair> {
    let mut best: Option<(ThresholdPair, f64)> = None;
    for (pair, fuel) in cells {
        let replace = match &best {
            None => true,
            Some((bp, bf)) => fuel < *bf || (fuel == *bf && prefer_on_tie(&pair, bp)),
        };
        if replace {
            best = Some((pair, fuel));
        }
    }
    best.map(|(p, _)| p)
}

pub fn threshold_sweep_model(model: &MissionModel, cfg: &SweepConfig) -> Result<SweepReport> {
    let pairs = threshold_pairs(cfg, &model.trailer.battery)?;
    let grid = crate::par::map(&pairs, |pair| {
        let policy = ReactivePolicy::bang_bang(pair.lower, pair.upper);
        let eval = model.evaluate_policy(policy);
        SweepCell {
            lower: pair.lower,
            upper: pair.upper,
            extra_fuel_l: eval.extra_fuel_l,
            feasible: eval.feasible(),
        }
    });
    let best = pick_best(grid.iter().filter(|c| c.feasible).map(|c| {
        (
            ThresholdPair {
                lower: c.lower,
                upper: c.upper,
            },
            c.extra_fuel_l,
        )
    }));
    Ok(SweepReport {
        cycle: model.name.clone(),
        grid,
        best,
    })
}

pub fn threshold_sweep(
    mission: &DriveCycle,
    vp: &VehicleParams,
    tp: &TrailerParams,
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    threshold_sweep_model(&MissionModel::new(mission, vp, tp)?, cfg)
}

/// Thresholds that complete every mission, minimizing the summed extra fuel.
pub fn general_from_sweeps(reports: &[SweepReport]) -> Result<ThresholdPair> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("general bang-bang needs at least one mission"))?;
    for r in reports {
        let same = r.grid.len() == first.grid.len()
            && r.grid
                .iter()
                .zip(&first.grid)
                .all(|(a, b)| a.lower == b.lower && a.upper == b.upper);
        if !same {
            return Err(Error::invalid("sweep reports were run on different grids"));
        }
    }
    let cells = (0..first.grid.len()).filter_map(|j| {
        let all_feasible = reports.iter().all(|r| r.grid[j].feasible);
        all_feasible.then(|| {
            let c = &first.grid[j];
            let total: f64 = reports.iter().map(|r| r.grid[j].extra_fuel_l).sum();
            (
                ThresholdPair {
                    lower: c.lower,
                    upper: c.upper,
                },
                total,
            )
        })
    });
    pick_best(cells)
        .ok_or_else(|| Error::Infeasible("no threshold pair completes every mission".to_string()))
}

pub fn general_bangbang(
    missions: &[DriveCycle],
    vp: &VehicleParams,
    tp: &TrailerParams,
    cfg: &SweepConfig,
) -> Result<ThresholdPair> {
    let reports = missions
        .iter()
        .map(|m| threshold_sweep(m, vp, tp, cfg))
        .collect::<Result<Vec<_>>>()?;
    general_from_sweeps(&reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    #[serde(rename = "extra_fuel_L")]
    pub extra_fuel_l: f64,
    #[serde(rename = "total_fuel_L")]
    pub total_fuel_l: f64,
    pub min_soc: f64,
    pub final_soc: f64,
    pub feasible: bool,
}

impl From<&StrategyResult> for StrategySummary {
    fn from(r: &StrategyResult) -> Self {
        Self {
            extra_fuel_l: r.extra_fuel_l,
            total_fuel_l: r.total_fuel_l,
            min_soc: r.min_soc,
            final_soc: r.final_soc,
            feasible: r.feasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub general: ThresholdPair,
    pub optimal: ThresholdPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cycle: String,
    pub strategies: BTreeMap<String, StrategySummary>,
    /// Relative extra-fuel reduction `(worse - better) / worse` in percent;
    /// `None` when the worse strategy needs no extra fuel.
    pub savings_pct: BTreeMap<String, Option<f64>>,
    pub thresholds: Thresholds,
}

impl ComparisonReport {
    pub fn extra_fuel(&self, strategy: &str) -> f64 {
        self.strategies[strategy].extra_fuel_l
    }
}

/// Full outcome of comparing the strategies on one mission.
#[derive(Debug, Clone)]
pub struct MissionComparison {
    pub report: ComparisonReport,
    pub sweep: SweepReport,
    pub results: BTreeMap<String, StrategyResult>,
    /// SoC traces in [`STRATEGIES`] order.
    pub traces: Vec<(String, SimTrace)>,
    pub greedy_iterations: usize,
}

pub fn saving_pct(worse: f64, better: f64) -> Option<f64> {
    (worse > 0.0).then(|| (worse - better) / worse * 100.0)
}

/// Runs constant towing, the fleet-wide bang-bang pair, the per-mission best
/// pair and the greedy optimum on every mission.
pub fn compare_strategies(
    missions: &[DriveCycle],
    vp: &VehicleParams,
    tp: &TrailerParams,
    cfg: &SweepConfig,
) -> Result<Vec<MissionComparison>> {
    let models = missions
        .iter()
        .map(|m| MissionModel::new(m, vp, tp))
        .collect::<Result<Vec<_>>>()?;
    let sweeps = crate::par::map(&models, |m| threshold_sweep_model(m, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let general = general_from_sweeps(&sweeps)?;

    let jobs: Vec<(&MissionModel, &SweepReport)> = models.iter().zip(&sweeps).collect();
    crate::par::map(&jobs, |(model, sweep)| compare_one(model, sweep, general))
        .into_iter()
        .collect()
}

fn compare_one(
    model: &MissionModel,
    sweep: &SweepReport,
    general: ThresholdPair,
) -> Result<MissionComparison> {
    let optimal = sweep.best.ok_or_else(|| {
        Error::Infeasible(format!("no bang-bang thresholds complete `{}`", model.name))
    })?;
    let greedy = greedy_optimize_model(model, None)?;

    let runs = [
        (
            CONSTANT,
            model.run(Control::Policy(ReactivePolicy::constant()))?,
        ),
        (
            GENERAL_BANGBANG,
            model.run(Control::Policy(ReactivePolicy::bang_bang(
                general.lower,
                general.upper,
            )))?,
        ),
        (
            OPTIMAL_BANGBANG,
            model.run(Control::Policy(ReactivePolicy::bang_bang(
                optimal.lower,
                optimal.upper,
            )))?,
        ),
        (
            GLOBAL_OPTIMUM,
            model.run(Control::Schedule(&greedy.schedule))?,
        ),
    ];

    let mut results = BTreeMap::new();
    let mut strategies = BTreeMap::new();
    let mut traces = Vec::new();
    for (name, (trace, result)) in runs {
        if !result.feasible {
            return Err(Error::Infeasible(format!(
                "strategy {name} does not complete `{}`",
                model.name
            )));
        }
        strategies.insert(name.to_string(), StrategySummary::from(&result));
        results.insert(name.to_string(), result);
        traces.push((name.to_string(), trace));
    }
    let fuel = |s: &str| results[s].extra_fuel_l;
    let mut savings_pct = BTreeMap::new();
    for (worse, better) in [
        (CONSTANT, GLOBAL_OPTIMUM),
        (GENERAL_BANGBANG, GLOBAL_OPTIMUM),
        (OPTIMAL_BANGBANG, GLOBAL_OPTIMUM),
        (CONSTANT, OPTIMAL_BANGBANG),
        (CONSTANT, GENERAL_BANGBANG),
    ] {
        savings_pct.insert(
            format!("{better}_vs_{worse}"),
            saving_pct(fuel(worse), fuel(better)),
        );
    }

    Ok(MissionComparison {
        report: ComparisonReport {
            cycle: model.name.clone(),
            strategies,
            savings_pct,
            thresholds: Thresholds { general, optimal },
        },
        sweep: sweep.clone(),
        results,
        traces,
        greedy_iterations: greedy.iterations,
    })
}

/// Files written by a comparison run, as (file name, contents) in a fixed
/// order: `comparison.json`, then per mission `<cycle>_soc.svg` and
/// `<cycle>_sweep.svg`.
pub fn comparison_artifacts(
    comparisons: &[MissionComparison],
    soc_floor: f64,
) -> Result<Vec<(String, String)>> {
    let mut names: Vec<&str> = comparisons
        .iter()
        .map(|c| c.report.cycle.as_str())
        .collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(
            "mission names must be unique within a comparison",
        ));
    }
    let reports: Vec<&ComparisonReport> = comparisons.iter().map(|c| &c.report).collect();
    let mut files = vec![("comparison.json".to_string(), to_json(&reports)?)];
    for c in comparisons {
        let labelled: Vec<(String, &SimTrace)> =
            c.traces.iter().map(|(n, t)| (n.clone(), t)).collect();
        files.push((
            format!("{}_soc.svg", c.report.cycle),
            render_soc_plot(&labelled, soc_floor)?,
        ));
        files.push((
            format!("{}_sweep.svg", c.report.cycle),
            render_sweep_heatmap(&c.sweep)?,
        ));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_136_pairs() {
        let pairs = threshold_pairs(&SweepConfig::default(), &BatteryParams::default()).unwrap();
        assert_eq!(pairs.len(), 136);
        assert!(pairs.iter().all(|p| p.lower < p.upper));
        assert_eq!(
            pairs[0],
            ThresholdPair {
                lower: 0.2,
                upper: 0.25
            }
        );
        assert_eq!(
            pairs[135],
            ThresholdPair {
                lower: 0.95,
                upper: 1.0
            }
        );
    }

    #[test]
    fn grid_must_divide_ranges() {
        let cfg = SweepConfig {
            grid_step: 0.07,
            ..Default::default()
        };
        assert!(threshold_pairs(&cfg, &BatteryParams::default()).is_err());
    }

    #[test]
    fn tie_break_prefers_higher_lower_then_lower_upper() {
        let cells = vec![
            (
                ThresholdPair {
                    lower: 0.3,
                    upper: 0.5,
                },
                1.0,
            ),
            (
                ThresholdPair {
                    lower: 0.4,
                    upper: 0.6,
                },
                1.0,
            ),
            (
                ThresholdPair {
                    lower: 0.4,
                    upper: 0.5,
                },
                1.0,
            ),
            (
                ThresholdPair {
                    lower: 0.2,
                    upper: 0.3,
                },
                2.0,
            ),
        ];
        assert_eq!(
            pick_best(cells.into_iter()),
            Some(ThresholdPair {
                lower: 0.4,
                upper: 0.5
            })
        );
    }

    #[test]
    fn savings_convention() {
        assert_eq!(saving_pct(10.0, 2.5), Some(75.0));
        assert_eq!(saving_pct(0.0, 0.0), None);
    }
}
