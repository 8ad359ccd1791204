//! Command-line front end for the tempered stable Fokker–Planck solver.
//!
//! `tempered-fpe <command> --config FILE [flags]` resolves a flat key/value
//! config (see [`config`]), runs the pipeline (see [`run`]) and writes
//! `density_*.csv`, `path.csv` and `meta.json` into the output directory.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use tempered_fpe::{Error, Result};

pub use config::{Command, Domain, ExperimentConfig, RawConfig};
pub use run::{execute, Outcome, Setup};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Fpe,
    Mc,
    Compare,
    Zakai,
    Signal,
}

#[derive(Debug, Parser)]
#[command(name = "tempered-fpe", version, about = "Nonlocal Fokker-Planck experiments with tempered stable noise")]
struct Args {
    /// Pipeline to run; falls back to the `command` key of the config file.
    #[arg(value_enum)]
    command: Option<CommandArg>,

    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Comma-separated list; several values run a sweep.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c_alpha: Option<String>,
    /// zero, bistable, or ascending coefficients `c0,c1,...`.
    #[arg(long, allow_hyphen_values = true)]
    drift: Option<String>,
    /// Bounded absorbing domain `(a, b)`.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    domain: Option<Vec<String>>,
    /// Truncated whole line `[-L, L]`.
    #[arg(long, value_name = "L", allow_hyphen_values = true)]
    half_width: Option<String>,
    /// Half span J of the grid.
    #[arg(long, value_name = "J")]
    grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_final: Option<String>,
    #[arg(long, value_name = "T1,T2,...", allow_hyphen_values = true)]
    snapshots: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_name = "N")]
    paths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// Path of a recorded observation CSV for `zakai`.
    #[arg(long, value_name = "FILE")]
    observations: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Any config key, e.g. `--set mc_dt=1e-3`. Applied after the other flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommandArg {
    fn name(self) -> &'static str {
        match self {
            CommandArg::Fpe => "fpe",
            CommandArg::Mc => "mc",
            CommandArg::Compare => "compare",
            CommandArg::Zakai => "zakai",
            CommandArg::Signal => "signal",
        }
    }
}

fn resolve(args: Args) -> Result<ExperimentConfig> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    if let Some(c) = args.command {
        raw.set("command", c.name());
    }
    let flags = [
        ("alpha", args.alpha),
        ("lambda", args.lambda),
        ("c_alpha", args.c_alpha),
        ("drift", args.drift),
        ("domain", args.domain.map(|v| v.join(", "))),
        ("half_width", args.half_width),
        ("grid", args.grid),
        ("dt", args.dt),
        ("t_final", args.t_final),
        ("snapshots", args.snapshots),
        ("seed", args.seed),
        ("paths", args.paths),
        ("epsilon", args.epsilon),
        ("observations", args.observations),
        ("out", args.out),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, v);
        }
    }
    let mut bad = Vec::new();
    for kv in &args.set {
        match kv.split_once('=') {
            Some((k, v)) => raw.set(k, v.trim()),
            None => bad.push(format!("--set `{kv}` is not KEY=VALUE")),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    ExperimentConfig::resolve(&raw)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("TEMPERED_FPE_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Error::Config(vec![format!(
            "TEMPERED_FPE_THREADS must be a non-negative integer (got `{value}`)"
        )])
    })?;
    if n > 0 {
        // only fails if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Exit status for an error: 2 for invalid configuration, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `argv`, runs the pipeline and returns the process exit status.
/// Errors are reported on stderr as one line `error[<class>]: <message>`.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads()
        .and_then(|()| resolve(args))
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(outcome) => {
            eprintln!(
                "wrote {} files and meta.json to {}",
                outcome.files.len(),
                outcome.meta["config"]["out"].as_str().unwrap_or("")
            );
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}
