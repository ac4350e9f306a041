//! `freeflyer`: run scenarios, the reference experiments, availability and the
//! self-check suite.
//!
//! Exit codes: 0 success, 1 a claim or check failed, 2 bad input (usage,
//! scenario, paths), 3 the simulation itself failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use freeflyer_core::selfcheck::{self, faults, CheckReport};
use freeflyer_core::sim::{
    availability, canned, experiment_attitude_compensation, experiment_overshoot, format_significant,
    load_scenario_with, nonholonomy_comparison, planar_cycle_golden, run, torque_limit_sweep, AvailabilityInputs,
    RunLog, ScenarioConfig, CANNED,
};
use freeflyer_core::Error;
use log::info;
use serde_json::json;

const EXIT_CLAIM: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;

#[derive(Parser)]
#[command(name = "freeflyer", version, about = "Free-floating space manipulator simulator")]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write `<name>.csv` and `<name>.summary.json` for each.
    Simulate {
        /// Scenario files, or names of built-in scenarios.
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[command(flatten)]
        out: OutDir,
        /// Override a field, e.g. `--set run.dt=0.0005` (repeatable).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Scenarios to run concurrently.
        #[arg(short, long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run one of the reference experiments and write its logs and report.
    Experiment {
        name: ExperimentName,
        /// Base scenario instead of the built-in reference one.
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        out: OutDir,
        /// Override a field of the base scenario (repeatable).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Print A = MTBF / (MTBF + MTTR + MTFS) to six significant digits.
    Availability {
        /// Mean time between failures (h).
        #[arg(long)]
        mtbf: f64,
        /// Mean time to repair (h).
        #[arg(long)]
        mttr: f64,
        /// Mean time for spares (h).
        #[arg(long)]
        mtfs: f64,
    },
    /// Run the fast invariant suite.
    Check {
        /// Inject a known fault to show the suite catching it.
        #[arg(long, hide = true, value_parser = clap::builder::PossibleValuesParser::new(faults::FAULTS))]
        inject: Option<String>,
    },
    /// Print a scenario with defaults filled in, or list the built-in ones.
    Describe {
        scenario: Option<String>,
        /// Override a field (repeatable).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(clap::Args)]
struct OutDir {
    /// Output directory.
    #[arg(short = 'o', long = "out", env = "FREEFLYER_OUT", default_value = "out")]
    dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Overshoot,
    Nonholonomy,
    Attitude,
}

impl ExperimentName {
    fn reference(self) -> &'static str {
        match self {
            Self::Overshoot => "free-floater-reach",
            Self::Nonholonomy => "planar-cycle",
            Self::Attitude => "attitude-maneuver",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Overshoot => "overshoot",
            Self::Nonholonomy => "nonholonomy",
            Self::Attitude => "attitude",
        }
    }
}

/// A failure that ends the process with `code`.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IntegrationFailure { .. } | Error::SingularMassMatrix { .. } => EXIT_INTEGRATION,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

/// A file path, or the name of a built-in scenario when no such file exists.
fn load(input: &str, overrides: &[String]) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(input);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {input}: {e}")))?
    } else if let Some(c) = canned(input) {
        c.to_json()
    } else {
        return Err(input_error(format!("{input}: no such file or built-in scenario")));
    };
    load_scenario_with(&text, overrides).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{input}: {}", f.message);
        f
    })
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| input_error(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".freeflyer-write-test");
    std::fs::write(&probe, b"").map_err(|e| input_error(format!("{} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

fn file_stem(name: &str) -> String {
    let stem: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    if stem.is_empty() {
        "scenario".into()
    } else {
        stem
    }
}

fn write_log(log: &RunLog, dir: &Path, stem: &str) -> Result<(), Failure> {
    let (csv, summary) = log.write_files(dir, stem)?;
    println!("{}", csv.display());
    println!("{}", summary.display());
    Ok(())
}

fn write_report(dir: &Path, experiment: &str, report: &serde_json::Value) -> Result<(), Failure> {
    let path = dir.join(format!("{experiment}.report.json"));
    let text = serde_json::to_string_pretty(report).expect("report is plain JSON");
    std::fs::write(&path, text + "\n").map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
    println!("{}", path.display());
    Ok(())
}

fn simulate(inputs: &[String], dir: &Path, overrides: &[String], jobs: usize) -> Result<(), Failure> {
    if jobs == 0 {
        return Err(input_error("--jobs must be at least 1"));
    }
    let configs = inputs.iter().map(|i| load(i, overrides)).collect::<Result<Vec<_>, _>>()?;
    prepare_dir(dir)?;
    let run_one = |c: &ScenarioConfig| {
        info!("running {} ({} steps)", c.name, c.steps());
        run(c)
    };
    let results: Vec<_> = if jobs == 1 || configs.len() == 1 {
        configs.iter().map(run_one).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| input_error(format!("cannot start {jobs} workers: {e}")))?;
        pool.install(|| configs.par_iter().map(run_one).collect())
    };
    let mut worst: Option<Failure> = None;
    for (config, result) in configs.iter().zip(results) {
        let outcome = result.map_err(Failure::from).and_then(|log| {
            info!("{}: final error {:e}, wall {:.2} s", config.name, log.summary.final_error, log.summary.wall_time_s);
            write_log(&log, dir, &file_stem(&config.name))
        });
        if let Err(mut f) = outcome {
            f.message = format!("{}: {}", config.name, f.message);
            eprintln!("error: {}", f.message);
            if worst.as_ref().is_none_or(|w| f.code > w.code) {
                worst = Some(Failure { code: f.code, message: String::new() });
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn verdict(holds: bool, claim: &str) -> Result<(), Failure> {
    println!("claim {}: {claim}", if holds { "holds" } else { "FAILS" });
    if holds {
        Ok(())
    } else {
        Err(Failure { code: EXIT_CLAIM, message: String::new() })
    }
}

fn experiment(name: ExperimentName, scenario: Option<&str>, dir: &Path, overrides: &[String]) -> Result<(), Failure> {
    let config = load(scenario.unwrap_or(name.reference()), overrides)?;
    prepare_dir(dir)?;
    let stem = file_stem(&config.name);
    info!("{} experiment on {}", name.label(), config.name);
    match name {
        ExperimentName::Overshoot => {
            let report = experiment_overshoot(&config)?;
            write_log(&report.generalized, dir, &format!("{stem}-generalized"))?;
            write_log(&report.naive, dir, &format!("{stem}-naive"))?;
            let s = &report.summary;
            let claim = "naive peak error > generalized peak error, generalized final error < position accuracy";
            write_report(
                dir,
                name.label(),
                &json!({ "experiment": name.label(), "scenario": config.name, "claim": claim, "summary": s }),
            )?;
            println!("peak error: naive {:.6e} m, generalized {:.6e} m", s.naive_peak, s.generalized_peak);
            println!("final error: generalized {:.6e} m (accuracy {:e} m)", s.generalized_final, s.position_accuracy);
            verdict(s.claim_holds, claim)
        }
        ExperimentName::Nonholonomy => {
            // the golden only applies to the built-in cycle
            let golden = (scenario.is_none() && overrides.is_empty()).then(planar_cycle_golden);
            let (c, cycle, reversed) = nonholonomy_comparison(&config, golden)?;
            write_log(&cycle, dir, &stem)?;
            write_log(&reversed, dir, &format!("{stem}-there-and-back"))?;
            let claim = "cycle rotates the base by > 1e-3 rad (within 1e-6 of the golden value when one applies), \
                         its time reverse by < 1e-9 rad, CoM drift < 1e-6 m";
            write_report(
                dir,
                name.label(),
                &json!({ "experiment": name.label(), "scenario": config.name, "claim": claim, "summary": c }),
            )?;
            println!("net base rotation about z: {:.12} rad", c.net_rotation_z);
            if let Some(g) = c.golden {
                println!("golden: {g:.12} rad (difference {:.3e})", (c.net_rotation_z - g).abs());
            }
            println!("time-reversed cycle: {:.3e} rad", c.reversed.net_rotation_angle);
            verdict(c.claim_holds, claim)
        }
        ExperimentName::Attitude => {
            let report = experiment_attitude_compensation(&config)?;
            write_log(&report.pd_only, dir, &format!("{stem}-pd"))?;
            write_log(&report.feedforward, dir, &format!("{stem}-pd-feedforward"))?;
            let sweep = torque_limit_sweep(&config, &[0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0])?;
            let s = &report.summary;
            let claim = "peak attitude error with feedforward < PD only";
            write_report(
                dir,
                name.label(),
                &json!({ "experiment": name.label(), "scenario": config.name, "claim": claim, "summary": s, "torque_limit_sweep": sweep }),
            )?;
            println!(
                "peak attitude error: PD only {:.6e} rad, PD + feedforward {:.6e} rad",
                s.pd_only_peak, s.feedforward_peak
            );
            verdict(s.claim_holds, claim)
        }
    }
}

fn print_checks(report: &CheckReport) {
    for o in &report.outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {} ({:.3e}, tolerance {:.1e})", o.name, o.detail, o.value, o.tolerance);
    }
    println!("{} checks in {:.2} s", report.outcomes.len(), report.elapsed_s);
}

fn check(inject: Option<&str>) -> Result<(), Failure> {
    let report = match inject {
        Some(fault) => {
            let hooks = faults::inject(fault).ok_or_else(|| input_error(format!("unknown fault {fault}")))?;
            selfcheck::run_checks_with(&hooks)
        }
        None => selfcheck::run_checks(),
    };
    print_checks(&report);
    let failed: Vec<_> = report.failures().map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_CLAIM, message: format!("failed: {}", failed.join(", ")) })
    }
}

fn describe(scenario: Option<&str>, overrides: &[String]) -> Result<(), Failure> {
    match scenario {
        Some(input) => println!("{}", load(input, overrides)?.to_json()),
        None => {
            for name in CANNED {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { scenarios, out, overrides, jobs } => simulate(&scenarios, &out.dir, &overrides, jobs),
        Command::Experiment { name, scenario, out, overrides } => {
            experiment(name, scenario.as_deref(), &out.dir, &overrides)
        }
        Command::Availability { mtbf, mttr, mtfs } => {
            let a = availability(&AvailabilityInputs { mtbf, mttr, mtfs })?;
            println!("{}", format_significant(a, 6));
            Ok(())
        }
        Command::Check { inject } => check(inject.as_deref()),
        Command::Describe { scenario, overrides } => describe(scenario.as_deref(), &overrides),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
