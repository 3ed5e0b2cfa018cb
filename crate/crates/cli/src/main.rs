mod fit;
mod io;
mod report;
mod sim;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lorenzfit::{Family, McConfig};

#[derive(Parser)]
#[command(name = "lorenzfit", version, about = "Income inequality from grouped Lorenz-curve data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit distributions to grouped datasets (JSON lines or CSV).
    Fit(FitArgs),
    /// Draw microdata from a mixture preset, a mixture or a family.
    Simulate(SimulateArgs),
    /// Reduce microdata to grouped shares.
    Group(GroupArgs),
    /// Inequality measures of microdata or of a parametric distribution.
    Measures(MeasuresArgs),
    /// Error bins and dominance matrices from fit output.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nls,
    Gmm,
    Both,
}

#[derive(Args)]
pub struct McArgs {
    /// Monte Carlo draws for Gini fallbacks and Atkinson indices.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl McArgs {
    pub fn config(&self) -> Result<McConfig> {
        Ok(McConfig::new(self.mc_n, self.seed)?)
    }
}

#[derive(Args)]
pub struct FitArgs {
    /// Input file; `.csv` is read as share tables, anything else as JSON lines. `-` reads JSON lines from stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "gb2,b2,sm,dagum,ln,fisk,weibull", value_parser = parse_family)]
    pub families: Vec<Family>,
    #[arg(long, value_enum, default_value_t = MethodArg::Nls)]
    pub method: MethodArg,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5")]
    pub epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Built-in mixture, 1 to 6.
    #[arg(long, conflicts_with_all = ["mixture", "family"])]
    pub preset: Option<usize>,
    /// Mixture as `beta,mu,alpha,sigma,omega`.
    #[arg(long, value_delimiter = ',', conflicts_with = "family")]
    pub mixture: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_family, requires = "params")]
    pub family: Option<Family>,
    /// Full parameter vector of `--family`, scale included.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    #[arg(long, default_value_t = lorenzfit::synth::DEFAULT_MIXTURE_N)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Microdata output (`income,weight` CSV, or JSON with `--format json`); stdout when `--groups` is absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also group the draws into this many shares.
    #[arg(long)]
    pub groups: Option<usize>,
    /// Grouped output (stdout when absent); `.csv` writes a share table, anything else JSON lines.
    #[arg(long, requires = "groups")]
    pub grouped_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args)]
pub struct GroupArgs {
    /// Microdata CSV with an `income` column and optional `weight` and `size` columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    /// Divide incomes by the square root of household size.
    #[arg(long)]
    pub equivalise: bool,
    #[arg(long)]
    pub bottom_code: bool,
    #[arg(long)]
    pub top_code: bool,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct MeasuresArgs {
    /// Microdata CSV; omit to evaluate `--family`/`--params` instead.
    #[arg(long, required_unless_present = "family")]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_family, requires = "params", conflicts_with = "input")]
    pub family: Option<Family>,
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5")]
    pub epsilon: Vec<f64>,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct ReportArgs {
    /// JSON-lines output of `fit`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: lorenzfit::Error| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Fit(a) => fit::run(&a),
        Command::Simulate(a) => sim::simulate(&a),
        Command::Group(a) => sim::group(&a),
        Command::Measures(a) => sim::measures(&a),
        Command::Report(a) => report::run(&a),
    }
}

pub fn check_epsilons(eps: &[f64]) -> Result<()> {
    for &e in eps {
        if !(e >= 0.0 && e.is_finite()) {
            bail!("epsilon {e} must be a nonnegative number");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli).context("lorenzfit") {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
