//! Command-line scenario runner.
//!
//! Exit codes: `0` success, `2` bad invocation or configuration, `3`
//! numerical failure (including sweeps where some point failed, after all
//! outputs are written), `4` output could not be written. Failures are
//! reported on stderr as one JSON object `{"error": code, "message": ...}`.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::Error;
use crate::lindblad::SteadyOptions;
use config::{Experiment, ScenarioInput};
use run::{execute, execute_with, truncation_report};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "polaron", version, about = "Atom-cavity-mechanics polaron simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML). Without it, every default applies.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the scenario.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Concurrent sweep points. Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Rerun at doubled cutoffs and write truncation_check.json.
    #[arg(long, global = true)]
    check_truncation: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Polaron energies, numerical and closed form.
    Spectrum,
    /// Joint spectral density and its transitions.
    Jsd,
    /// Time evolution from a chosen mechanical state, with a cooling fit.
    Evolve,
    /// Steady state and its scalar observables.
    Steady,
    /// Steady states along one parameter axis.
    Sweep,
    /// Steady-state mechanical Wigner function.
    Wigner,
    /// Incoherently pumped steady states over Q_ac for several Q_m.
    IncoherentSweep,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Spectrum => Experiment::Spectrum,
            Command::Jsd => Experiment::Jsd,
            Command::Evolve => Experiment::Evolve,
            Command::Steady => Experiment::Steady,
            Command::Sweep => Experiment::Sweep,
            Command::Wigner => Experiment::Wigner,
            Command::IncoherentSweep => Experiment::IncoherentSweep,
        }
    }
}

enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn report(code: &str, message: &str) {
    eprintln!("{}", json!({ "error": code, "message": message }));
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::InvalidTruncation(_) | Error::UnsupportedRegime(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn json_file<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("plain data serializes");
    out.push(b'\n');
    out
}

fn run_cli(cli: &Cli) -> Result<i32, Failure> {
    let input = match &cli.config {
        Some(path) => ScenarioInput::load(path)?,
        None => ScenarioInput::default(),
    };
    let experiment = cli.command.experiment();
    let mut cfg = input.resolve(experiment)?;
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    let workers = match cli.workers {
        Some(0) => return Err(Error::Config("--workers must be at least 1".into()).into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;

    let base = execute(&cfg, cfg.truncation, &pool)?;
    let check = if cli.check_truncation {
        // uniqueness is probed at the base cutoffs; the rerun only supplies values
        let solver = SteadyOptions {
            check_kernel: false,
            ..SteadyOptions::default()
        };
        let doubled = execute_with(&cfg, cfg.truncation.doubled(), &pool, &solver)?;
        Some(truncation_report(&base, &doubled, cfg.truncation))
    } else {
        None
    };

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut names: Vec<String> = base.files.iter().map(|(n, _)| n.clone()).collect();
    for (name, bytes) in &base.files {
        write_file(dir, name, bytes)?;
    }
    if let Some(report) = &check {
        write_file(dir, "truncation_check.json", &json_file(report))?;
        names.push("truncation_check.json".into());
    }
    names.insert(0, "manifest.json".into());
    let manifest = json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "config": cfg,
        "derived": {
            "q_ac": cfg.params.q_ac(),
            "q_m": cfg.params.q_m(),
            "lower_polariton": cfg.params.lower_polariton(),
            "upper_polariton": cfg.params.upper_polariton(),
        },
        "files": names,
        "failed_points": base.failures,
        "summary": base.scalars,
    });
    write_file(dir, "manifest.json", &json_file(&manifest))?;
    if base.failures > 0 {
        report(
            "sweep-points-failed",
            &format!("{} sweep point(s) failed; see the error column", base.failures),
        );
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs the scenario.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(Failure::Lib(e)) => {
            report(e.code(), &e.to_string());
            exit_code(&e)
        }
        Err(Failure::Io(msg)) => {
            report("io", &msg);
            EXIT_IO
        }
    }
}

pub fn main() -> i32 {
    run_with_args(std::env::args_os())
}
