//! Batch front end: reads a run configuration, runs one experiment and
//! writes comma-separated tables plus a `summary.json` record.
//!
//! Exit codes: 0 pass, 1 failed check or run error, 2 usage or
//! configuration error.

mod commands;
mod config;
mod functions;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{Failure, Output};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "zygmund",
    version,
    about = "Whitney, seminorm, extension and singular-integral experiments"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set resolution=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Whitney coverings of the domain and their invariants.
    Decompose(Common),
    /// Campanato seminorms of the configured function for p = 1, 2, inf.
    Seminorm(Common),
    /// Whitney extension of the configured function.
    Extend(Common),
    /// Truncated singular integrals of the configured function.
    Apply(Common),
    /// Oscillation profiles of the operators applied to polynomials.
    Tpcheck(Common),
    /// Type, doubling constant, Dini test and xi tables of the growth function.
    GrowthInfo(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Decompose(_) => "decompose",
            Command::Seminorm(_) => "seminorm",
            Command::Extend(_) => "extend",
            Command::Apply(_) => "apply",
            Command::Tpcheck(_) => "tpcheck",
            Command::GrowthInfo(_) => "growth-info",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Decompose(c)
            | Command::Seminorm(c)
            | Command::Extend(c)
            | Command::Apply(c)
            | Command::Tpcheck(c)
            | Command::GrowthInfo(c) => c,
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig, config::ConfigError> {
    let mut overrides = common.set.clone();
    if let Some(o) = &common.out {
        overrides.push(format!("out=\"{}\"", o.display()));
    }
    if let Some(s) = common.seed {
        overrides.push(format!("seed={s}"));
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

fn run(command: &Command) -> Result<bool, Failure> {
    let cfg = resolve(command.common())?;
    println!("# {} configuration", command.name());
    print!("{}", toml::to_string(&cfg).map_err(|e| Failure::Run(e.to_string()))?);
    let mut out = Output::new(&cfg.out)?;
    let outcome = match command {
        Command::Decompose(_) => commands::decompose(&cfg, &mut out),
        Command::Seminorm(_) => commands::seminorm(&cfg, &mut out),
        Command::Extend(_) => commands::extend_cmd(&cfg, &mut out),
        Command::Apply(_) => commands::apply(&cfg, &mut out),
        Command::Tpcheck(_) => commands::tpcheck(&cfg, &mut out),
        Command::GrowthInfo(_) => commands::growth_info(&cfg, &mut out),
    }?;
    let summary = json!({
        "command": command.name(),
        "config": cfg,
        "pass": outcome.pass,
        "result": outcome.result,
    });
    out.json("summary.json", &summary)?;
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!("{}", if outcome.pass { "pass" } else { "FAIL" });
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
