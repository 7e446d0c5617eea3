//! Command-line front end and HTTP service over `siting-core`.

pub mod server;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use siting_core::commands::{cmd_rank, cmd_weights, cmd_whatif, parse_overrides};
use siting_core::fucom::ConsistencyThresholds;
use siting_core::{AppError, Category, GroupMode, NormalizationMethod, RunConfig};

/// Log filter variable, `RUST_LOG` syntax (e.g. `SITING_LOG=debug`).
pub const LOG_ENV: &str = "SITING_LOG";

#[derive(Debug, Parser)]
#[command(name = "siting", version, about = "Expert-weighted site suitability ranking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive per-expert and global weights from survey responses.
    Weights(WeightsArgs),
    /// Rank sites with a weight document.
    Rank(RankArgs),
    /// Re-rank with some weights overridden and report rank reversals.
    Whatif(WhatifArgs),
    /// Serve weights, rankings and what-if evaluation over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub surveys: PathBuf,
    /// Linguistic scale JSON; built-in default when omitted.
    #[arg(long)]
    pub scale: Option<PathBuf>,
    /// Criteria registry JSON; built-in registry when omitted.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest chi accepted as consistent for crisp category chains.
    #[arg(long, default_value_t = ConsistencyThresholds::default().crisp)]
    pub crisp_threshold: f64,
    /// Chi must stay below this for fuzzy sub-attribute chains.
    #[arg(long, default_value_t = ConsistencyThresholds::default().fuzzy)]
    pub fuzzy_threshold: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Overall,
    Renormalized,
}

impl From<ModeArg> for GroupMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Overall => GroupMode::Overall,
            ModeArg::Renormalized => GroupMode::Renormalized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    MinMax,
    Vector,
}

impl From<NormArg> for NormalizationMethod {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::MinMax => NormalizationMethod::MinMax,
            NormArg::Vector => NormalizationMethod::Vector,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupArg {
    #[value(name = "SP")]
    Sp,
    #[value(name = "FP")]
    Fp,
    #[value(name = "RHM")]
    Rhm,
    #[value(name = "CSF")]
    Csf,
}

impl From<GroupArg> for Category {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Sp => Category::SP,
            GroupArg::Fp => Category::FP,
            GroupArg::Rhm => Category::RHM,
            GroupArg::Csf => Category::CSF,
        }
    }
}

/// Inputs shared by `rank`, `whatif` and `serve`.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub sites: PathBuf,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub weights: PathBuf,
    /// How group scores are weighted.
    #[arg(long, value_enum, default_value = "overall")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "min-max")]
    pub normalization: NormArg,
}

impl DataArgs {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            sites: Some(self.sites.clone()),
            registry: self.registry.clone(),
            weights: Some(self.weights.clone()),
            group_mode: self.mode.into(),
            normalization: self.normalization.into(),
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Emit a single-group table.
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WhatifArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Overrides as CODE=W[,CODE=W...]; omit for the baseline.
    #[arg(long, default_value = "")]
    pub adjust: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
}

fn emit(doc: String, out: Option<&PathBuf>) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| AppError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

/// Runs one command to completion.
pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Weights(a) => {
            let config = RunConfig {
                surveys: Some(a.surveys),
                scale: a.scale,
                registry: a.registry,
                output: a.out.clone(),
                thresholds: ConsistencyThresholds {
                    crisp: a.crisp_threshold,
                    fuzzy: a.fuzzy_threshold,
                },
                ..RunConfig::default()
            };
            tracing::info!(surveys = ?config.surveys, "computing weights");
            emit(cmd_weights(&config)?, a.out.as_ref())
        }
        Command::Rank(a) => {
            let config = a.data.config();
            tracing::info!(sites = ?config.sites, "ranking");
            emit(cmd_rank(&config, a.group.map(Category::from))?, a.out.as_ref())
        }
        Command::Whatif(a) => {
            let overrides = parse_overrides(&a.adjust)?;
            tracing::info!(?overrides, "what-if");
            emit(cmd_whatif(&a.data.config(), &overrides)?, a.out.as_ref())
        }
        Command::Serve(a) => {
            let config = RunConfig {
                port: a.port,
                ..a.data.config()
            };
            config.validate()?;
            let dataset = siting_core::Dataset::load(&config)?;
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| AppError::Internal(format!("cannot start runtime: {e}")))?;
            runtime.block_on(server::serve(dataset, &a.bind, config.port))
        }
    }
}
