//! `cdlift`: validate, run and summarize payload transport missions.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdlift_core::sim::scenario::canonical_scenario;
use cdlift_core::sim::{compute_metrics, run, GuidanceMode, ScenarioConfig};
use cdlift_core::Error;
use clap::{Parser, Subcommand};

const EXIT_INVALID: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "cdlift", version, about = "Cooperative payload transport by a quadcopter fleet")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every violated constraint.
    Validate {
        config: PathBuf,
    },
    /// Simulate a mission and write the trace and metrics.
    Run {
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV path (default: <out-dir>/trace.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metrics path (default: <out-dir>/metrics.txt).
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Directory for default output paths.
        #[arg(long, env = "CDLIFT_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
        /// Turn on a boolean key, e.g. `lqg.literal_innovation`.
        #[arg(long = "flag", value_name = "KEY")]
        flags: Vec<String>,
        /// Override any key, e.g. `sim.noise=false`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Simulate a mission and print only the metrics.
    Metrics {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "flag", value_name = "KEY")]
        flags: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Write the canonical 20-vehicle scenario.
    GenPaperScenario {
        /// Output path (default: <out-dir>/canonical.toml).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "CDLIFT_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Invalid(String),
    Abort(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidSchedule(_) | Error::SingularTriangle { .. } => {
                Failure::Invalid(e.to_string())
            }
            other => Failure::Abort(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Abort(format!("{}: {e}", path.display()))
}

fn load(path: &Path, seed: Option<u64>, flags: &[String], sets: &[String]) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut overrides: Vec<(String, String)> = flags.iter().map(|f| (f.clone(), "true".into())).collect();
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::Invalid(format!("--set {s}: expected KEY=VALUE")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = seed {
        overrides.push(("scenario.seed".into(), seed.to_string()));
    }
    ScenarioConfig::from_toml_with_overrides(&text, &overrides)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn simulate(config: &ScenarioConfig) -> Result<String, Failure> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(Failure::Invalid(violations.join("\n")));
    }
    let trace = run(config)?;
    let schedule = match config.mode {
        GuidanceMode::Continuum => Some(config.schedule()?),
        GuidanceMode::Hover => None,
    };
    let report = compute_metrics(&trace, schedule.as_ref());
    let mut text = format!("scenario = {}\nseed = {}\n", config.name, config.seed);
    text.push_str(&report.to_text());
    Ok(text)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { config } => {
            let c = load(&config, None, &[], &[])?;
            let violations = c.violations();
            if violations.is_empty() {
                println!("{}: valid ({} agents)", config.display(), c.agent_count());
                Ok(())
            } else {
                Err(Failure::Invalid(violations.join("\n")))
            }
        }
        Command::Run {
            config,
            seed,
            out,
            metrics,
            out_dir,
            flags,
            sets,
        } => {
            let c = load(&config, seed, &flags, &sets)?;
            let violations = c.violations();
            if !violations.is_empty() {
                return Err(Failure::Invalid(violations.join("\n")));
            }
            let trace = run(&c)?;
            let schedule = match c.mode {
                GuidanceMode::Continuum => Some(c.schedule()?),
                GuidanceMode::Hover => None,
            };
            let report = compute_metrics(&trace, schedule.as_ref());
            let trace_path = out.unwrap_or_else(|| out_dir.join("trace.csv"));
            let metrics_path = metrics.unwrap_or_else(|| out_dir.join("metrics.txt"));
            let file = fs::File::create(&trace_path).map_err(|e| io_failure(&trace_path, e))?;
            trace
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| io_failure(&trace_path, e))?;
            let text = format!("scenario = {}\nseed = {}\n{}", c.name, c.seed, report.to_text());
            fs::write(&metrics_path, text).map_err(|e| io_failure(&metrics_path, e))?;
            println!(
                "{} ticks, trace {}, metrics {}",
                trace.times.len(),
                trace_path.display(),
                metrics_path.display()
            );
            Ok(())
        }
        Command::Metrics {
            config,
            seed,
            flags,
            sets,
        } => {
            let c = load(&config, seed, &flags, &sets)?;
            print!("{}", simulate(&c)?);
            Ok(())
        }
        Command::GenPaperScenario { out, out_dir } => {
            let path = out.unwrap_or_else(|| out_dir.join("canonical.toml"));
            fs::write(&path, canonical_scenario().to_toml_string()).map_err(|e| io_failure(&path, e))?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid config:\n{msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Abort(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ABORT)
        }
    }
}
