//! `scbf`: command-line driver for the SCBF laboratory.

mod config;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::{parse_config, Experiment};
use manifest::OutputDir;
use run::{dispatch, CliError};

/// Default output root when neither `--out` nor `out` in the config is given.
const OUT_ENV: &str = "SCBF_OUT";

#[derive(Parser, Debug)]
#[command(name = "scbf", version, about = "Stochastic convective Brinkman-Forchheimer laboratory")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(e) = cfg.experiment {
        if e != cli.experiment {
            return Err(CliError::Usage(format!(
                "config is for `{}` but `{}` was requested",
                e.name(),
                cli.experiment.name()
            )));
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(dt) = cli.dt {
        cfg.solver.dt = dt;
    }
    if let Some(p) = cli.paths {
        cfg.paths = p;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    // overrides go through the same checks
    let issues = cfg.validate();
    if !issues.is_empty() {
        return Err(CliError::Config(config::ConfigError {
            issues: issues
                .into_iter()
                .map(|(key, reason)| config::ConfigIssue { key, line: None, reason })
                .collect(),
        }));
    }
    for w in cfg.warnings() {
        eprintln!("{}", json!({ "warning": w }));
    }
    let dir = match &cfg.out {
        Some(o) => o.clone(),
        None => {
            let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("scbf-out"));
            root.join(format!("{}-seed{}", cli.experiment.name(), cfg.seed))
        }
    };
    let normalized = cfg.to_toml();
    let mut out = OutputDir::create(&dir, cli.experiment.name(), &normalized)?;
    out.write("config.toml", normalized.as_bytes())?;
    let verdict = dispatch(cli.experiment, &cfg, &mut out)?;
    out.finish()?;
    Ok(verdict.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code }));
            ExitCode::from(code as u8)
        }
    }
}
