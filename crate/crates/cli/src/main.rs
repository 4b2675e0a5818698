//! `trailer-ems`: generate cycles, simulate towing strategies, sweep
//! bang-bang thresholds, optimize schedules and compare strategies.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trailer_ems::config::Config;
use trailer_ems::cycle::{self, DriveCycle, Profile};
use trailer_ems::ems::{
    dp_optimize_model, exhaustive_optimize_model, greedy_optimize_model, ReactivePolicy,
};
use trailer_ems::harness::{self, ThresholdPair};
use trailer_ems::simulate::{Control, MissionModel, StrategyResult, TowingSchedule};
use trailer_ems::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "trailer-ems",
    version,
    about = "Energy management for an e-trailer with a refrigeration unit"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Print the built-in default configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,

    /// Worker threads (default: logical cores). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a drive cycle and compose it into a mission with breaks.
    Gencycle(GencycleArgs),
    /// Simulate one towing strategy on a mission.
    Simulate(SimulateArgs),
    /// Evaluate every bang-bang threshold pair on the sweep grid.
    Sweep(SweepArgs),
    /// Compute a fuel-minimal towing schedule.
    Optimize(OptimizeArgs),
    /// Run the four-strategy comparison on several missions.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Urban,
    Regional,
    Longhaul,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Urban => Profile::Urban,
            ProfileArg::Regional => Profile::Regional,
            ProfileArg::Longhaul => Profile::Longhaul,
        }
    }
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON configuration; omitted keys take their defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GencycleArgs {
    #[arg(long, value_enum)]
    profile: ProfileArg,
    /// Length of one base cycle in seconds.
    #[arg(long, value_name = "S", default_value_t = 7200.0)]
    duration: f64,
    #[arg(long, value_name = "N", default_value_t = 1)]
    seed: u64,
    /// Repetitions of the base cycle (default: sim.repeats).
    #[arg(long, value_name = "R")]
    repeats: Option<usize>,
    /// Break between repetitions in minutes (default: sim.break_s / 60).
    #[arg(long, value_name = "M")]
    break_min: Option<f64>,
    /// Output CSV (default: standard output).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Constant,
    Bangbang,
    Schedule,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Mission CSV (`time_s,speed_mps,grade_pct`).
    #[arg(long, value_name = "FILE")]
    cycle: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Bang-bang lower threshold as a SoC fraction.
    #[arg(long, value_name = "X", required_if_eq("strategy", "bangbang"))]
    lower: Option<f64>,
    /// Bang-bang upper threshold as a SoC fraction.
    #[arg(long, value_name = "Y", required_if_eq("strategy", "bangbang"))]
    upper: Option<f64>,
    /// Towing schedule CSV (`step,active`).
    #[arg(long, value_name = "FILE", required_if_eq("strategy", "schedule"), conflicts_with_all = ["lower", "upper"])]
    schedule: Option<PathBuf>,
    /// Per-step trace CSV.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Report JSON (default: standard output).
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_name = "FILE")]
    cycle: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Report JSON (default: standard output).
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Heatmap SVG.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleArg {
    Dp,
    Exhaustive,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_name = "FILE")]
    cycle: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Use a reference optimizer instead of the greedy one.
    #[arg(long, value_enum)]
    oracle: Option<OracleArg>,
    /// Schedule CSV (`step,active`).
    #[arg(long, value_name = "FILE")]
    schedule: Option<PathBuf>,
    /// Report JSON (default: standard output).
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Mission CSVs, comma separated. File stems name the missions.
    #[arg(long, value_name = "F1,F2,...", value_delimiter = ',', required = true)]
    cycles: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) | Error::Unsatisfiable(_) => EXIT_INFEASIBLE,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Powertrain(_) => EXIT_IO,
            Error::InvalidInput(_) => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Errors while reading an input file are I/O or parse errors whatever
/// their kind, and carry the file name.
fn input_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| input_error(path, e))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to standard output when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Outcome {
    match path {
        Some(p) => write(p, contents),
        None => io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::new(EXIT_IO, format!("stdout: {e}"))),
    }
}

fn load_config(arg: &ConfigArg) -> Outcome<Config> {
    match &arg.config {
        Some(path) => Config::from_json(&read(path)?).map_err(|e| input_error(path, e)),
        None => Ok(Config::default()),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mission".to_string())
}

/// Loads a mission CSV and brings it onto the configured time step.
fn load_mission(path: &Path, cfg: &Config) -> Outcome<DriveCycle> {
    let mission = cycle::load_cycle(&read(path)?, &stem(path)).map_err(|e| input_error(path, e))?;
    if mission.is_uniform() && (mission.dt_s - cfg.sim.dt_s).abs() <= 1e-9 {
        return Ok(mission);
    }
    cycle::resample(&mission, cfg.sim.dt_s).map_err(|e| input_error(path, e))
}

fn build_model(path: &Path, cfg: &Config) -> Outcome<MissionModel> {
    let mission = load_mission(path, cfg)?;
    MissionModel::new(&mission, &cfg.vehicle, &cfg.trailer).map_err(|e| input_error(path, e))
}

/// Run report: the strategy result plus SoC figures in percent.
#[derive(Serialize)]
struct RunReport<'a> {
    cycle: &'a str,
    strategy: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<ThresholdPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(flatten)]
    result: &'a StrategyResult,
    min_soc_pct: f64,
    final_soc_pct: f64,
}

impl<'a> RunReport<'a> {
    fn new(cycle: &'a str, strategy: &'a str, result: &'a StrategyResult) -> Self {
        Self {
            cycle,
            strategy,
            thresholds: None,
            iterations: None,
            result,
            min_soc_pct: result.min_soc * 100.0,
            final_soc_pct: result.final_soc * 100.0,
        }
    }
}

fn gencycle(args: &GencycleArgs) -> Outcome {
    let cfg = load_config(&args.config)?;
    let repeats = args.repeats.unwrap_or(cfg.sim.repeats);
    let break_s = args.break_min.map_or(cfg.sim.break_s, |m| m * 60.0);
    if repeats == 0 {
        return Err(Failure::new(EXIT_USAGE, "--repeats must be at least 1"));
    }
    if !(break_s.is_finite() && break_s >= 0.0) {
        return Err(Failure::new(EXIT_USAGE, "--break-min must be non-negative"));
    }
    let profile = Profile::from(args.profile);
    let mut base = cycle::synthesize_cycle(profile, args.duration, args.seed)?;
    if (base.dt_s - cfg.sim.dt_s).abs() > 1e-9 {
        base = cycle::resample(&base, cfg.sim.dt_s)?;
    }
    let mission = cycle::compose_mission(&base, repeats, break_s)?;
    emit(args.out.as_deref(), &mission.to_csv())
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let cfg = load_config(&args.config)?;
    let model = build_model(&args.cycle, &cfg)?;
    let schedule;
    let mut thresholds = None;
    let control = match args.strategy {
        StrategyArg::Constant => Control::Policy(ReactivePolicy::constant()),
        StrategyArg::Bangbang => {
            let (Some(lower), Some(upper)) = (args.lower, args.upper) else {
                return Err(Failure::new(
                    EXIT_USAGE,
                    "bangbang needs --lower and --upper",
                ));
            };
            let policy = ReactivePolicy::bang_bang(lower, upper);
            policy.validate(&cfg.trailer.battery)?;
            thresholds = Some(ThresholdPair { lower, upper });
            Control::Policy(policy)
        }
        StrategyArg::Schedule => {
            let Some(path) = &args.schedule else {
                return Err(Failure::new(
                    EXIT_USAGE,
                    "schedule strategy needs --schedule",
                ));
            };
            schedule = TowingSchedule::from_csv(&read(path)?).map_err(|e| input_error(path, e))?;
            if schedule.len() != model.len() {
                return Err(input_error(
                    path,
                    format!(
                        "schedule has {} steps, mission has {}",
                        schedule.len(),
                        model.len()
                    ),
                ));
            }
            Control::Schedule(&schedule)
        }
    };
    let (trace, result) = model.run(control)?;
    if let Some(path) = &args.trace {
        write(path, &trace.to_csv())?;
    }
    let strategy = args
        .strategy
        .to_possible_value()
        .expect("no skipped variants");
    let mut report = RunReport::new(&model.name, strategy.get_name(), &result);
    report.thresholds = thresholds;
    emit(args.report.as_deref(), &harness::to_json(&report)?)
}

fn sweep(args: &SweepArgs) -> Outcome {
    let cfg = load_config(&args.config)?;
    let model = build_model(&args.cycle, &cfg)?;
    let report = harness::threshold_sweep_model(&model, &cfg.sweep)?;
    if let Some(path) = &args.plot {
        write(path, &harness::render_sweep_heatmap(&report)?)?;
    }
    emit(args.report.as_deref(), &harness::to_json(&report)?)
}

fn optimize(args: &OptimizeArgs) -> Outcome {
    let cfg = load_config(&args.config)?;
    let model = build_model(&args.cycle, &cfg)?;
    let (name, schedule, iterations) = match args.oracle {
        None => {
            let out = greedy_optimize_model(&model, cfg.greedy.max_iterations)?;
            ("greedy", out.schedule, Some(out.iterations))
        }
        Some(OracleArg::Dp) => ("dp", dp_optimize_model(&model, cfg.dp.soc_grid_step)?, None),
        Some(OracleArg::Exhaustive) => ("exhaustive", exhaustive_optimize_model(&model)?, None),
    };
    let (_, result) = model.run(Control::Schedule(&schedule))?;
    if !result.feasible {
        return Err(Failure::new(
            EXIT_INFEASIBLE,
            format!("{name} schedule does not complete `{}`", model.name),
        ));
    }
    if let Some(path) = &args.schedule {
        write(path, &schedule.to_csv())?;
    }
    let mut report = RunReport::new(&model.name, name, &result);
    report.iterations = iterations;
    emit(args.report.as_deref(), &harness::to_json(&report)?)
}

fn compare(args: &CompareArgs) -> Outcome {
    let cfg = load_config(&args.config)?;
    let missions = args
        .cycles
        .iter()
        .map(|p| load_mission(p, &cfg))
        .collect::<Outcome<Vec<_>>>()?;
    let comparisons =
        harness::compare_strategies(&missions, &cfg.vehicle, &cfg.trailer, &cfg.sweep)?;
    let files = harness::comparison_artifacts(&comparisons, cfg.trailer.battery.soc_floor)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.out_dir.display())))?;
    for (name, contents) in &files {
        write(&args.out_dir.join(name), contents)?;
    }

    let mut out = String::new();
    for c in &comparisons {
        let r = &c.report;
        out.push_str(&format!("{}:", r.cycle));
        for s in harness::STRATEGIES {
            out.push_str(&format!(" {s}={} L", harness::fmt_sig6(r.extra_fuel(s))));
        }
        out.push('\n');
    }
    emit(None, &out)
}

fn dispatch(cli: &Cli) -> Outcome {
    if cli.dump_config {
        return emit(None, &Config::default().to_json()?);
    }
    let Some(command) = &cli.command else {
        return Err(Failure::new(
            EXIT_USAGE,
            "a subcommand is required (see --help)",
        ));
    };
    match command {
        Command::Gencycle(a) => gencycle(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Optimize(a) => optimize(a),
        Command::Compare(a) => compare(a),
    }
}

fn run(cli: &Cli) -> Outcome {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(usize::from(n));
    }
    let pool = pool.build().map_err(|e| {
        Failure::new(
            EXIT_USAGE,
            format!("cannot start {} worker threads: {e}", cli.jobs.unwrap_or(0)),
        )
    })?;
    pool.install(|| dispatch(cli))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let line = f.message.replace('\n', " ");
            eprintln!("trailer-ems: {line}");
            ExitCode::from(f.code)
        }
    }
}
