//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trailer_ems::config::Config;
use trailer_ems::cycle::{DriveCycle, Profile};
use trailer_ems::ems::{
    dp_fuel_tolerance, dp_optimize_model, exhaustive_optimize_model, greedy_optimize_model,
};
use trailer_ems::harness::{
    compare_strategies, comparison_artifacts, shipped_mission, MissionComparison, CONSTANT,
    GENERAL_BANGBANG, GLOBAL_OPTIMUM, OPTIMAL_BANGBANG,
};
use trailer_ems::simulate::{Control, MissionModel, TowingSchedule};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=5;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

struct Shipped {
    seed: u64,
    missions: Vec<DriveCycle>,
    comparisons: Vec<MissionComparison>,
}

fn run_shipped(cfg: &Config) -> (Vec<Shipped>, f64) {
    let start = Instant::now();
    let runs = SEEDS
        .map(|seed| {
            let missions: Vec<DriveCycle> = Profile::ALL
                .iter()
                .map(|&p| shipped_mission(p, seed, &cfg.sim).expect("shipped mission"))
                .collect();
            let comparisons = compare_strategies(&missions, &cfg.vehicle, &cfg.trailer, &cfg.sweep)
                .expect("comparison runs on shipped missions");
            Shipped {
                seed,
                missions,
                comparisons,
            }
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn strategy_ordering(runs: &[Shipped], elapsed_s: f64) -> Verdict {
    let mut violations = Vec::new();
    for run in runs {
        for c in &run.comparisons {
            let r = &c.report;
            let f = |s: &str| r.extra_fuel(s);
            let all_feasible = r.strategies.values().all(|s| s.feasible);
            let ordered = f(GLOBAL_OPTIMUM) <= f(OPTIMAL_BANGBANG)
                && f(OPTIMAL_BANGBANG) <= f(GENERAL_BANGBANG)
                && f(GENERAL_BANGBANG) <= f(CONSTANT);
            if !(all_feasible && ordered) {
                violations.push(format!(
                    "seed {} {}: {:.3} / {:.3} / {:.3} / {:.3}",
                    run.seed,
                    r.cycle,
                    f(GLOBAL_OPTIMUM),
                    f(OPTIMAL_BANGBANG),
                    f(GENERAL_BANGBANG),
                    f(CONSTANT)
                ));
            }
        }
    }
    let fast = elapsed_s < 60.0;
    verdict(
        violations.is_empty() && fast,
        format!(
            "{} violations over {} missions, {elapsed_s:.1} s on {} thread(s){}",
            violations.len(),
            runs.len() * Profile::ALL.len(),
            rayon::current_num_threads(),
            if violations.is_empty() {
                String::new()
            } else {
                format!(": {}", violations.join("; "))
            }
        ),
    )
}

fn savings_ordering(runs: &[Shipped]) -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for run in runs {
        let saving = |name: &str| {
            run.comparisons
                .iter()
                .find(|c| c.report.cycle == name)
                .and_then(|c| c.report.savings_pct["global_optimum_vs_optimal_bangbang"])
                .unwrap_or(f64::NAN)
        };
        let (u, r, l) = (saving("urban"), saving("regional"), saving("longhaul"));
        let seed_ok = u > r && u > l && l < r;
        ok &= seed_ok;
        lines.push(format!("seed {}: {u:.1}/{r:.1}/{l:.1}%", run.seed));
    }
    verdict(
        ok,
        format!(
            "urban/regional/longhaul saving vs optimal bang-bang: {}",
            lines.join(", ")
        ),
    )
}

fn near_floor_depletion(runs: &[Shipped]) -> Verdict {
    let mut ok = true;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut count = 0;
    for c in runs.iter().flat_map(|r| &r.comparisons) {
        let res = &c.results[GLOBAL_OPTIMUM];
        if res.towing_steps == 0 {
            continue;
        }
        count += 1;
        lo = lo.min(res.min_soc);
        hi = hi.max(res.min_soc);
        ok &= (0.20..=0.22).contains(&res.min_soc);
    }
    verdict(
        ok,
        format!("{count} towing missions, greedy min SoC in [{lo:.4}, {hi:.4}]"),
    )
}

fn oracle_equivalence() -> (Verdict, Vec<String>) {
    let toys = common::feasible_toys(0x0AC1E, 100, 12);
    let mut exhaustive_le_greedy = 0;
    let mut dp_close = 0;
    let mut greedy_exact = 0;
    let mut trace_issues = Vec::new();
    for (k, toy) in toys.iter().enumerate() {
        let ex = exhaustive_optimize_model(&toy.model).expect("constant towing is feasible");
        let (ex_trace, ex_res) = toy.model.run(Control::Schedule(&ex)).unwrap();
        if let Some(v) = common::trace_violation(&ex_trace, &toy.cycle, &toy.trailer) {
            trace_issues.push(format!("toy {k} exhaustive: {v}"));
        }
        let greedy_fuel = match greedy_optimize_model(&toy.model, None) {
            Ok(g) => {
                if let Some(v) = common::trace_violation(
                    &toy.model.run(Control::Schedule(&g.schedule)).unwrap().0,
                    &toy.cycle,
                    &toy.trailer,
                ) {
                    trace_issues.push(format!("toy {k} greedy: {v}"));
                }
                g.result.extra_fuel_l
            }
            Err(_) => f64::INFINITY,
        };
        if ex_res.extra_fuel_l <= greedy_fuel + 1e-12 {
            exhaustive_le_greedy += 1;
        }
        if (greedy_fuel - ex_res.extra_fuel_l).abs() <= 1e-12 {
            greedy_exact += 1;
        }
        if let Ok(dp) = dp_optimize_model(&toy.model, 1e-3) {
            let (_, dp_res) = toy.model.run(Control::Schedule(&dp)).unwrap();
            let tol = dp_fuel_tolerance(&toy.model, 1e-3);
            if dp_res.feasible && (dp_res.extra_fuel_l - ex_res.extra_fuel_l).abs() <= tol {
                dp_close += 1;
            }
        }
    }
    let n = toys.len();
    (
        verdict(
            exhaustive_le_greedy == n && dp_close >= 95 && greedy_exact >= 70,
            format!(
                "{n} toys: exhaustive <= greedy on {exhaustive_le_greedy}, dp within one grid step on {dp_close}, greedy exact on {greedy_exact} ({:.0}%)",
                100.0 * greedy_exact as f64 / n as f64
            ),
        ),
        trace_issues,
    )
}

fn energy_balance(runs: &[Shipped], cfg: &Config, toy_issues: &[String]) -> Verdict {
    let mut issues: Vec<String> = toy_issues.to_vec();
    let mut traces = 0;
    for run in runs {
        for (mission, c) in run.missions.iter().zip(&run.comparisons) {
            for (name, trace) in &c.traces {
                traces += 1;
                if let Some(v) = common::trace_violation(trace, mission, &cfg.trailer) {
                    issues.push(format!("seed {} {} {name}: {v}", run.seed, mission.name));
                }
            }
        }
    }
    verdict(
        issues.is_empty(),
        format!(
            "{traces} mission traces plus toy traces, {} violations{}",
            issues.len(),
            issues.first().map(|s| format!(": {s}")).unwrap_or_default()
        ),
    )
}

fn sweep_integrity(runs: &[Shipped]) -> Verdict {
    let mut issues = Vec::new();
    for run in runs {
        for c in &run.comparisons {
            let sweep = &c.sweep;
            if sweep.grid.len() != 136 {
                issues.push(format!(
                    "seed {} {}: {} cells",
                    run.seed,
                    sweep.cycle,
                    sweep.grid.len()
                ));
            }
            let min = sweep
                .grid
                .iter()
                .filter(|g| g.feasible)
                .map(|g| g.extra_fuel_l)
                .fold(f64::INFINITY, f64::min);
            let best_cell = sweep.best.and_then(|b| {
                sweep
                    .grid
                    .iter()
                    .find(|g| g.lower == b.lower && g.upper == b.upper)
            });
            match best_cell {
                Some(cell) if cell.feasible && cell.extra_fuel_l == min => {}
                _ => issues.push(format!(
                    "seed {} {}: best cell not the feasible minimum",
                    run.seed, sweep.cycle
                )),
            }
            if sweep.cycle == "longhaul" && sweep.grid.iter().all(|g| g.feasible) {
                issues.push(format!("seed {} longhaul: no infeasible cell", run.seed));
            }
        }
    }
    verdict(
        issues.is_empty(),
        if issues.is_empty() {
            "all sweeps checked by full scan".into()
        } else {
            issues.join("; ")
        },
    )
}

fn monotone_dominance(runs: &[Shipped], cfg: &Config) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut issues = Vec::new();
    let mut checked = 0;
    let mut discarded = 0;
    for mission in &runs[0].missions {
        let model = MissionModel::new(mission, &cfg.vehicle, &cfg.trailer).unwrap();
        let candidates: Vec<usize> = (0..model.len())
            .filter(|&i| model.steps[i].tow.is_some())
            .collect();
        let mut kept = 0;
        let mut attempts = 0;
        while kept < 50 && attempts < 5000 {
            attempts += 1;
            let p_a = rng.gen_range(0.0..0.08);
            let p_extra = rng.gen_range(0.0..0.08);
            let mut a = TowingSchedule::none(model.len());
            let mut b = TowingSchedule::none(model.len());
            for &i in &candidates {
                let in_a = rng.gen_bool(p_a);
                a.active[i] = in_a;
                b.active[i] = in_a || rng.gen_bool(p_extra);
            }
            let (ta, ra) = model.run(Control::Schedule(&a)).unwrap();
            let (tb, rb) = model.run(Control::Schedule(&b)).unwrap();
            if ra.demoted_steps > 0 || rb.demoted_steps > 0 {
                discarded += 1;
                continue;
            }
            kept += 1;
            let soc_ok = ta.soc().zip(tb.soc()).all(|(sa, sb)| sb >= sa);
            if !soc_ok || rb.total_fuel_l < ra.total_fuel_l {
                issues.push(format!("{} pair {kept}", mission.name));
            }
        }
        if kept < 50 {
            issues.push(format!(
                "{}: only {kept} admissible pairs found",
                mission.name
            ));
        }
        checked += kept;
    }
    verdict(
        issues.is_empty(),
        format!(
            "{checked} pairs checked ({discarded} with demotions discarded){}",
            if issues.is_empty() {
                String::new()
            } else {
                format!(": {}", issues.join("; "))
            }
        ),
    )
}

fn determinism(cfg: &Config) -> Verdict {
    let missions: Vec<DriveCycle> = Profile::ALL
        .iter()
        .map(|&p| shipped_mission(p, 1, &cfg.sim).unwrap())
        .collect();
    let pipeline = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let cmp =
                    compare_strategies(&missions, &cfg.vehicle, &cfg.trailer, &cfg.sweep).unwrap();
                comparison_artifacts(&cmp, cfg.trailer.battery.soc_floor).unwrap()
            })
    };
    let reference = pipeline(1);
    let runs = [pipeline(1), pipeline(4)];
    let identical = runs.iter().all(|r| *r == reference);
    let bytes: usize = reference.iter().map(|(_, s)| s.len()).sum();
    verdict(
        identical,
        format!(
            "{} files, {bytes} bytes, identical across repeats and 1 vs 4 threads",
            reference.len()
        ),
    )
}

fn main() {
    let cfg = Config::default();
    let (runs, elapsed) = run_shipped(&cfg);
    let (oracles, toy_issues) = oracle_equivalence();
    let results = [
        ("1 strategy ordering", strategy_ordering(&runs, elapsed)),
        ("2 savings ordering", savings_ordering(&runs)),
        ("3 near-floor depletion", near_floor_depletion(&runs)),
        ("4 oracle equivalence", oracles),
        ("5 energy balance", energy_balance(&runs, &cfg, &toy_issues)),
        ("6 sweep integrity", sweep_integrity(&runs)),
        ("7 monotone dominance", monotone_dominance(&runs, &cfg)),
        ("8 determinism", determinism(&cfg)),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "{} [{name}] {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
