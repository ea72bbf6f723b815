//! The `panel-ecm` command line. Every subcommand reads one run config
//! and writes below its output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::synthetic::Preset;
use commands::Run;
use config::RunConfig;
use output::OutputLock;

#[derive(Debug, Parser)]
#[command(
    name = "panel-ecm",
    version,
    about = "Regional growth panel ECM: estimate, forecast, decompose"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, env = "PANEL_ECM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "PANEL_ECM_SEED")]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true, env = "PANEL_ECM_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads for the Monte Carlo suites (default: all cores).
    #[arg(long, global = true, env = "PANEL_ECM_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and summarize the input data.
    Ingest,
    /// Fit the long-run relation, the growth columns and the auxiliary equations.
    Estimate,
    /// Forecast the horizon under one or all scenarios.
    Forecast {
        #[arg(long, env = "PANEL_ECM_SCENARIO")]
        scenario: Option<String>,
    },
    /// Split forecast growth into its contributions.
    Decompose {
        #[arg(long, env = "PANEL_ECM_SCENARIO")]
        scenario: Option<String>,
    },
    /// Funding share summary table.
    Report,
    /// Monte Carlo suites on synthetic panels; `--reps 0` only validates.
    Simulate {
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Write a synthetic data set in the input layout.
    Generate {
        #[arg(long, value_enum, default_value = "finland-like")]
        preset: PresetArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    FinlandLike,
    Minimal,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::FinlandLike => Preset::FinlandLike,
            PresetArg::Minimal => Preset::Minimal,
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        Error::MissingArtifact(_) => 3,
        _ => 1,
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config { .. } => "config",
        Error::MissingArtifact(_) => "missing-artifact",
        Error::Io { .. } => "io",
        Error::Csv(_) | Error::Json(_) => "format",
        _ => "model",
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // a second call in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Command::Generate { preset } = cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("data"));
        let _lock = OutputLock::acquire(&out)?;
        for p in commands::cmd_generate(&out, preset.into(), cli.seed.unwrap_or(2021))? {
            println!("wrote {}", p.display());
        }
        return Ok(());
    }
    let path = cli.config.clone().ok_or_else(|| Error::Config {
        file: "<none>".into(),
        field: "--config".into(),
        message: "pass --config or set PANEL_ECM_CONFIG".into(),
    })?;
    let cfg = RunConfig::load(&path)?;
    cfg.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.out_dir));
    let seed = cli.seed.unwrap_or(cfg.seed);
    let _lock = OutputLock::acquire(&out)?;
    let mut r = Run::new(&cfg, out, seed);
    match &cli.command {
        Command::Ingest => commands::cmd_ingest(&mut r)?,
        Command::Estimate => commands::cmd_estimate(&mut r)?,
        Command::Forecast { scenario } => commands::cmd_forecast(&mut r, scenario.as_deref())?,
        Command::Decompose { scenario } => commands::cmd_decompose(&mut r, scenario.as_deref())?,
        Command::Report => commands::cmd_report(&mut r)?,
        Command::Simulate { reps } => commands::cmd_simulate(&mut r, *reps)?,
        Command::Generate { .. } => unreachable!(),
    }
    for p in &r.written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}
