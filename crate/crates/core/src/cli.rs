//! Command-line front end: `simulate`, `analyze` and `check`.
//!
//! Exit codes: 0 success, 1 failed property, 2 configuration error,
//! 3 runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::checks::{CheckOptions, PROPERTIES};
use crate::error::Error;
use crate::format::format_sig;
use crate::scenario::{analysis_text, load_scenario, parse_scenario, scenario_preset, Scenario, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "goodwin-sync",
    version,
    about = "Synchronization of coupled Goodwin-type oscillators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario (or a sweep over c) and write CSVs plus summary.txt.
    Simulate(SimulateArgs),
    /// Print bounds, gains and the coupling threshold for a scenario.
    Analyze(ScenarioArgs),
    /// Run the built-in property suite.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: gonze-fig, gonze2005 or goodwin-linear.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated coupling gains (overrides sweep.c).
    #[arg(long, value_delimiter = ',')]
    sweep_c: Option<Vec<f64>>,
    /// Seed for the initial conditions (overrides sim.seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// List the properties without running them.
    #[arg(long)]
    list: bool,
    /// Step size for the simulation-based properties.
    #[arg(long)]
    dt: Option<f64>,
}

fn load(args: &ScenarioArgs) -> crate::Result<Scenario> {
    let config = match (&args.config, &args.preset) {
        (Some(path), preset) => load_scenario(path, preset.as_deref())?,
        (None, Some(name)) => scenario_preset(name)?,
        (None, None) => parse_scenario("{}", None)?,
    };
    Scenario::build(config)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn simulate(args: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prepared = load(&args.scenario).and_then(|scn| {
        let mut config = scn.config;
        if let Some(c) = args.sweep_c {
            config.sweep = Some(SweepSpec { c });
        }
        if let Some(seed) = args.seed {
            config.sim.seed = seed;
        }
        if let Some(dir) = args.out {
            config.output.dir = dir;
        }
        Scenario::build(config)
    });
    let scn = match prepared {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = scn.config.output.dir.clone();
    match crate::scenario::run_simulate(&scn, &dir) {
        Ok(runs) => {
            for r in &runs {
                let _ = writeln!(
                    out,
                    "{} e_end={}",
                    r.csv.display(),
                    r.e_end.map_or_else(|| "na".into(), |e| format_sig(e, 6))
                );
            }
            let _ = writeln!(out, "{}", dir.join("summary.txt").display());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn analyze(args: ScenarioArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load(&args) {
        Ok(scn) => {
            let _ = write!(out, "{}", analysis_text(&scn.analyze(), scn.protocol.saturation()));
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn check(args: CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.list {
        for p in PROPERTIES {
            let _ = writeln!(out, "{:<28} {}", p.name, p.description);
        }
        return EXIT_OK;
    }
    if let Some(dt) = args.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            let _ = writeln!(err, "error: --dt must be positive");
            return EXIT_CONFIG;
        }
    }
    let opts = CheckOptions { dt: args.dt };
    let mut failed = 0;
    for p in PROPERTIES {
        match p.run(&opts) {
            Ok(()) => {
                let _ = writeln!(out, "PASS {}", p.name);
            }
            Err(why) => {
                failed += 1;
                let _ = writeln!(out, "FAIL {}: {why}", p.name);
            }
        }
    }
    let _ = writeln!(
        out,
        "{} of {} properties passed",
        PROPERTIES.len() - failed,
        PROPERTIES.len()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match cli.command {
        Command::Simulate(a) => simulate(a, out, err),
        Command::Analyze(a) => analyze(a, out, err),
        Command::Check(a) => check(a, out, err),
    }
}
