use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rainbow::copula::Family;
use rainbow::pricing::OptionKind;
use rainbow::reproduce::AlphaSource;
use serde::Serialize;

/// Used whenever `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_RATE: f64 = 0.025;
pub const DEFAULT_PATHS: usize = 100_000;
/// Replicates for `gof` when `--bootstrap` is not given.
pub const DEFAULT_GOF_BOOTSTRAP: usize = 199;

#[derive(Debug, Parser)]
#[command(name = "rainbow", version, about = "Mixture margins, copulas and bivariate rainbow option prices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Price files with a `date,close` header, one per asset.
    #[arg(long, short = 'i', global = true, num_args = 1.., value_delimiter = ',')]
    pub input: Vec<PathBuf>,

    /// Asset names, in input order. Defaults to the file stems.
    #[arg(long, global = true, value_delimiter = ',')]
    pub assets: Vec<String>,

    /// Continuously compounded rate over the option life.
    #[arg(long, global = true)]
    pub rate: Option<f64>,

    /// Copula families, comma separated (normal, clayton, gumbel, ...).
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_family)]
    pub families: Vec<Family>,

    #[arg(long, global = true, value_parser = parse_kind)]
    pub kind: Option<OptionKind>,

    /// One strike, or one per asset for the digital.
    #[arg(long = "strike", short = 'k', alias = "k", global = true, num_args = 1.., allow_negative_numbers = true)]
    pub strikes: Vec<f64>,

    /// Spot prices in asset order.
    #[arg(long, global = true, num_args = 1.., value_delimiter = ',')]
    pub spots: Vec<f64>,

    /// Monte Carlo paths.
    #[arg(long, short = 'n', global = true)]
    pub n: Option<usize>,

    /// Parametric bootstrap replicates for p-values.
    #[arg(long, global = true)]
    pub bootstrap: Option<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Report destination; standard output when absent.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Reference case JSON replacing the bundled one.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,

    /// Market model JSON for `price`, skipping all fitting.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,

    /// Discount-factor exponent for the reference case: printed or solved.
    #[arg(long, global = true, value_enum)]
    pub alpha: Option<AlphaArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Load price files, align them on dates, summarise log-returns.
    Ingest,
    /// Fit a two-regime Gaussian mixture to each asset's returns.
    FitMargins,
    /// Solve the discount factor and report the risk-neutral margins.
    Calibrate,
    /// Fit copulas to the returns by inference functions for margins.
    FitCopula,
    /// Bootstrap goodness-of-fit p-values.
    Gof,
    /// Fit, test and rank several families side by side.
    Select,
    /// Price one option by Monte Carlo with a deterministic cross-check.
    Price,
    /// Rebuild the reference price tables from the reference case.
    ReproduceTables,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::FitMargins => "fit-margins",
            Command::Calibrate => "calibrate",
            Command::FitCopula => "fit-copula",
            Command::Gof => "gof",
            Command::Select => "select",
            Command::Price => "price",
            Command::ReproduceTables => "reproduce-tables",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaArg {
    Printed,
    Solved,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_kind(s: &str) -> Result<OptionKind, String> {
    s.parse()
}

/// Everything a run depends on, after defaults are filled in. Embedded in
/// every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Vec<String>,
    pub assets: Vec<String>,
    pub rate: f64,
    pub families: Vec<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<OptionKind>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub strikes: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spots: Vec<f64>,
    pub n: usize,
    pub bootstrap: Option<usize>,
    pub seed: u64,
    pub format: Format,
    /// `bundled` or the path given with `--params`.
    pub params: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub alpha: AlphaSource,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> RunConfig {
        let input: Vec<String> = cli.input.iter().map(|p| p.display().to_string()).collect();
        let assets = if cli.assets.is_empty() {
            cli.input
                .iter()
                .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
                .collect()
        } else {
            cli.assets.clone()
        };
        let families = if !cli.families.is_empty() {
            cli.families.clone()
        } else if cli.command == Command::Price {
            vec![Family::Gaussian]
        } else {
            Family::SELECTION.to_vec()
        };
        let bootstrap = match (cli.command, cli.bootstrap) {
            (Command::Gof, None) => Some(DEFAULT_GOF_BOOTSTRAP),
            (_, b) => b,
        };
        let alpha = match (cli.alpha, cli.command) {
            (Some(AlphaArg::Printed), _) => AlphaSource::Printed,
            (Some(AlphaArg::Solved), _) => AlphaSource::Solved,
            // tables use the reported exponents, single prices stay arbitrage free
            (None, Command::ReproduceTables) => AlphaSource::Printed,
            (None, _) => AlphaSource::Solved,
        };
        RunConfig {
            command: cli.command,
            input,
            assets,
            rate: cli.rate.unwrap_or(DEFAULT_RATE),
            families,
            kind: cli.kind,
            strikes: cli.strikes.clone(),
            spots: cli.spots.clone(),
            n: cli.n.unwrap_or(DEFAULT_PATHS),
            bootstrap,
            seed: cli.seed.unwrap_or(DEFAULT_SEED),
            format: cli.format,
            params: cli.params.as_ref().map_or_else(|| "bundled".to_string(), |p| p.display().to_string()),
            model: cli.model.as_ref().map(|p| p.display().to_string()),
            alpha,
        }
    }
}
