use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "linexsel", version, about = "Estimation after selection under LINEX loss")]
pub struct Cli {
    /// Master seed for every random stream
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Directory for output files and manifest.json
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a population from one observation pair and print every estimate
    Estimate(EstimateArgs),
    /// Admissibility interval [d0, d1] of the shift class, optionally classifying d
    Admissibility(AdmissibilityArgs),
    /// Monte Carlo risk tables
    Simulate(SimulateArgs),
    /// Fit the two-group dataset and print the estimates
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// x1,x2
    #[arg(long, allow_hyphen_values = true, value_parser = pair)]
    pub x: [f64; 2],
    /// y1,y2
    #[arg(long, allow_hyphen_values = true, value_parser = pair)]
    pub y: [f64; 2],
    /// sigma_xx,sigma_xy,sigma_yy
    #[arg(long, allow_hyphen_values = true, value_parser = triple)]
    pub cov: [f64; 3],
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Hybrid threshold
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Also evaluate Y[2] + d (repeatable)
    #[arg(long, allow_hyphen_values = true)]
    pub d: Vec<f64>,
    /// mu1,mu2,m for the Bayes estimator
    #[arg(long, allow_hyphen_values = true, value_parser = triple)]
    pub prior: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct AdmissibilityArgs {
    /// sigma_xx,sigma_xy,sigma_yy
    #[arg(long, allow_hyphen_values = true, value_parser = triple)]
    pub cov: [f64; 3],
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Shift to classify
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Reference table 5..10, or "all"
    #[arg(long, value_parser = table_sel, conflicts_with_all = ["cov", "a", "means"])]
    pub table: Option<TableSel>,
    /// Custom grid: sigma_xx,sigma_xy,sigma_yy
    #[arg(long, allow_hyphen_values = true, value_parser = triple, requires_all = ["a", "means"])]
    pub cov: Option<[f64; 3]>,
    /// Custom grid: loss parameter
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Custom grid: theta1_x,theta1_y,theta2_x,theta2_y (repeatable)
    #[arg(long, allow_hyphen_values = true, value_parser = quad)]
    pub means: Vec<[f64; 4]>,
    /// Custom grid columns, e.g. N1,N2,N3^I
    #[arg(long, value_delimiter = ',', default_value = "N1,N2,N3,N4")]
    pub estimators: Vec<String>,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSel {
    One(u8),
    All,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with columns group,weight,cholesterol; the bundled poultry data if omitted
    pub path: Option<PathBuf>,
    /// Replace the 1745.46 cholesterol reading with 145.46
    #[arg(long)]
    pub clean: bool,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// mu1,mu2,m for the Bayes estimator
    #[arg(long, allow_hyphen_values = true, value_parser = triple)]
    pub prior: Option<[f64; 3]>,
}

fn floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(format!("{x} is not finite"));
    }
    Ok(v)
}

fn fixed<const N: usize>(s: &str) -> Result<[f64; N], String> {
    Ok(floats(s, N)?.try_into().expect("length checked"))
}

fn pair(s: &str) -> Result<[f64; 2], String> {
    fixed(s)
}

fn triple(s: &str) -> Result<[f64; 3], String> {
    fixed(s)
}

fn quad(s: &str) -> Result<[f64; 4], String> {
    fixed(s)
}

fn table_sel(s: &str) -> Result<TableSel, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(TableSel::All);
    }
    match s.parse::<u8>() {
        Ok(n @ 5..=10) => Ok(TableSel::One(n)),
        _ => Err(format!("expected 5..10 or 'all', got '{s}'")),
    }
}
