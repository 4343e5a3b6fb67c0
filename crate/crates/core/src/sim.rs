//! Monte Carlo LINEX risk with common random numbers across estimators.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, est_bayes, BaseEstimator, EstimatorSpec, PriorSpec};
use crate::loss::linex_loss;
use crate::sampling::{stream_id, stream_rng, BivariateSampler};
use crate::selection::{realized_parameter, select};
use crate::types::{CovarianceSpec, LinexParams, MeanVectorPair, ObservationPair, Pair};

pub const DEFAULT_REPS: usize = 20_000;

/// Cells whose standard error exceeds this fraction of the mean are flagged.
pub const HIGH_VARIANCE_RATIO: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub means: MeanVectorPair,
    pub cov: CovarianceSpec,
    pub a: LinexParams,
    pub reps: usize,
    pub master_seed: u64,
    /// stream under `master_seed`; see [`stream_id`]
    pub stream: u64,
    pub estimators: Vec<EstimatorSpec>,
}

impl SimConfig {
    pub fn new(
        means: MeanVectorPair,
        cov: CovarianceSpec,
        a: LinexParams,
        reps: usize,
        master_seed: u64,
        estimators: Vec<EstimatorSpec>,
    ) -> Result<Self> {
        let c = SimConfig {
            means,
            cov,
            a,
            reps,
            master_seed,
            stream: 0,
            estimators,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("estimator list is empty".into()));
        }
        for e in &self.estimators {
            check_spec(e, &self.cov)?;
        }
        Ok(())
    }
}

fn check_spec(spec: &EstimatorSpec, cov: &CovarianceSpec) -> Result<()> {
    spec.validate()?;
    if matches!(spec, EstimatorSpec::Bayes { .. }) && cov.is_degenerate() {
        return Err(Error::SingularCovariance { rho: cov.rho() });
    }
    Ok(())
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean; `None` below two samples.
    pub fn std_error(&self) -> Option<f64> {
        (self.n >= 2).then(|| (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean_risk: f64,
    /// undefined for a single replication
    pub std_error: Option<f64>,
    pub reps: usize,
    pub master_seed: u64,
    pub stream: u64,
}

impl RiskEstimate {
    fn from_acc(w: &Welford, master_seed: u64, stream: u64) -> Self {
        RiskEstimate {
            mean_risk: w.mean(),
            std_error: w.std_error(),
            reps: w.count(),
            master_seed,
            stream,
        }
    }

    pub fn high_variance(&self) -> bool {
        self.std_error.is_some_and(|se| se > HIGH_VARIANCE_RATIO * self.mean_risk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    /// mean of `loss_a - loss_b`
    pub difference: f64,
    pub std_error: Option<f64>,
    pub reps: usize,
}

/// Runs `f` on every replication's observation and selected parameter.
fn for_each_rep<F>(config: &SimConfig, mut f: F) -> Result<()>
where
    F: FnMut(usize, &ObservationPair, f64) -> Result<()>,
{
    let sampler = BivariateSampler::new(&config.cov);
    let mut rng = stream_rng(config.master_seed, config.stream);
    for rep in 0..config.reps {
        let obs = sampler.sample_pair(&config.means, &mut rng);
        let theta = realized_parameter(&obs, &config.means).value;
        f(rep, &obs, theta)?;
    }
    Ok(())
}

fn loss_of(spec: &EstimatorSpec, rep: usize, obs: &ObservationPair, theta: f64, config: &SimConfig) -> Result<f64> {
    let s = select(obs);
    let wrap = |e: Error| Error::Divergence {
        rep,
        estimator: spec.to_string(),
        source: Box::new(e),
    };
    let est = estimators::evaluate(spec, &s, config.a, &config.cov).map_err(wrap)?;
    linex_loss(est, theta, config.a).map_err(wrap)
}

/// Risk of every estimator in `config`, all on the same draws.
pub fn simulate_all(config: &SimConfig) -> Result<Vec<RiskEstimate>> {
    config.validate()?;
    let mut acc = vec![Welford::default(); config.estimators.len()];
    for_each_rep(config, |rep, obs, theta| {
        for (spec, w) in config.estimators.iter().zip(acc.iter_mut()) {
            w.push(loss_of(spec, rep, obs, theta, config)?);
        }
        Ok(())
    })?;
    Ok(acc
        .iter()
        .map(|w| RiskEstimate::from_acc(w, config.master_seed, config.stream))
        .collect())
}

/// Risk of one estimator; its draws do not depend on `config.estimators`.
pub fn simulate_risk(config: &SimConfig, spec: &EstimatorSpec) -> Result<RiskEstimate> {
    let single = SimConfig {
        estimators: vec![*spec],
        ..config.clone()
    };
    Ok(simulate_all(&single)?[0])
}

/// `R(a) - R(b)` on common random numbers.
pub fn paired_risk_difference(config: &SimConfig, spec_a: &EstimatorSpec, spec_b: &EstimatorSpec) -> Result<PairedDifference> {
    check_spec(spec_a, &config.cov)?;
    check_spec(spec_b, &config.cov)?;
    if config.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let mut w = Welford::default();
    for_each_rep(config, |rep, obs, theta| {
        let la = loss_of(spec_a, rep, obs, theta, config)?;
        let lb = loss_of(spec_b, rep, obs, theta, config)?;
        w.push(la - lb);
        Ok(())
    })?;
    Ok(PairedDifference {
        difference: w.mean(),
        std_error: w.std_error(),
        reps: w.count(),
    })
}

/// Bayes risk of the Bayes estimator: mean vectors drawn from the prior,
/// then data, then loss.
pub fn simulate_bayes_risk(
    prior: &PriorSpec,
    cov: &CovarianceSpec,
    a: LinexParams,
    reps: usize,
    master_seed: u64,
    stream: u64,
) -> Result<RiskEstimate> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let prior_cov = CovarianceSpec::new(prior.m, 0.0, prior.m)?;
    let prior_sampler = BivariateSampler::new(&prior_cov);
    let sampler = BivariateSampler::new(cov);
    let mu = Pair::new(prior.mu1, prior.mu2);
    let mut rng = stream_rng(master_seed, stream);
    let mut w = Welford::default();
    for rep in 0..reps {
        let means = MeanVectorPair {
            theta1: prior_sampler.sample(mu, &mut rng),
            theta2: prior_sampler.sample(mu, &mut rng),
        };
        let obs = sampler.sample_pair(&means, &mut rng);
        let theta = realized_parameter(&obs, &means).value;
        let est = est_bayes(&select(&obs), prior, a, cov)?;
        let loss = linex_loss(est, theta, a).map_err(|e| Error::Divergence {
            rep,
            estimator: "Bayes".into(),
            source: Box::new(e),
        })?;
        w.push(loss);
    }
    Ok(RiskEstimate::from_acc(&w, master_seed, stream))
}

/// The eleven mean-vector configurations shared by every risk table.
pub const TABLE_MEAN_PAIRS: [((f64, f64), (f64, f64)); 11] = [
    ((0.2, 2.0), (2.0, 0.2)),
    ((0.4, 1.8), (1.8, 0.4)),
    ((0.6, 1.6), (1.6, 0.6)),
    ((0.8, 1.4), (1.4, 0.8)),
    ((1.0, 1.2), (1.2, 1.0)),
    ((0.0, 0.0), (0.0, 0.0)),
    ((1.2, 1.0), (1.0, 1.2)),
    ((1.4, 0.8), (0.8, 1.4)),
    ((1.6, 0.6), (0.6, 1.6)),
    ((1.8, 0.4), (0.4, 1.8)),
    ((2.0, 0.2), (0.2, 2.0)),
];

pub fn table_means() -> Vec<MeanVectorPair> {
    TABLE_MEAN_PAIRS
        .iter()
        .map(|&((a, b), (c, d))| MeanVectorPair {
            theta1: Pair::new(a, b),
            theta2: Pair::new(c, d),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub label: String,
    pub spec: EstimatorSpec,
}

impl Column {
    pub fn new(label: impl Into<String>, spec: EstimatorSpec) -> Self {
        Column {
            label: label.into(),
            spec,
        }
    }
}

/// A full factorial of mean configurations by estimator columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub name: String,
    /// first component of every cell's stream path
    pub grid_index: u64,
    pub a: LinexParams,
    pub cov: CovarianceSpec,
    pub c: f64,
    pub means: Vec<MeanVectorPair>,
    pub columns: Vec<Column>,
}

/// One of the reference risk tables, numbered 5 to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableId(u8);

impl TableId {
    pub const ALL: [TableId; 6] = [TableId(5), TableId(6), TableId(7), TableId(8), TableId(9), TableId(10)];

    pub fn new(id: u8) -> Result<Self> {
        if (5..=10).contains(&id) {
            Ok(TableId(id))
        } else {
            Err(Error::InvalidParameter(format!("risk tables are numbered 5 to 10, got {id}")))
        }
    }

    pub fn id(&self) -> u8 {
        self.0
    }

    /// `(a, sigma, rho)` with `sigma_xx = sigma_yy = sigma`.
        // sigma = 2 throughout: N2 risks near a^2 sigma_yy / 2 = 1 in every table pin the scale
    pub fn settings(&self) -> (f64, f64, f64) {
        match self.0 {
            5 => (1.0, 2.0, 1.0),
            6 => (1.0, 2.0, -1.0),
            7 => (1.0, 2.0, 0.0),
            8 => (-1.0, 2.0, 1.0),
            9 => (-1.0, 2.0, -1.0),
            _ => (-1.0, 2.0, 0.0),
        }
    }

    pub fn column_labels(&self) -> &'static [&'static str] {
        match self.0 {
            5 => &["N1", "N1^I1", "N2", "N2^I2", "N3", "N4"],
            6 => &["N1", "N1^I3", "N2", "N2^I1", "N3", "N3^I3", "N4", "N4^I2"],
            7 => &["N1", "N2", "N3", "N3^I4", "N4"],
            8 => &["N1", "N2", "N3", "N4"],
            9 => &["N1", "N1^I2", "N2", "N2^I2", "N3", "N3^I3", "N4", "N4^I4"],
            _ => &["N1", "N1^I4", "N2", "N3", "N4", "N4^I5"],
        }
    }

    pub fn grid(&self, c: f64) -> GridSpec {
        let (a, sigma, rho) = self.settings();
        let columns = self
            .column_labels()
            .iter()
            .map(|l| Column::new(*l, spec_for_label(l, c).expect("table labels are well formed")))
            .collect();
        GridSpec {
            name: format!("table{}", self.0),
            grid_index: self.0 as u64,
            a: LinexParams::new(a).expect("nonzero"),
            cov: CovarianceSpec::from_correlation(sigma, sigma, rho).expect("valid"),
            c,
            means: table_means(),
            columns,
        }
    }
}

/// Parses `N1`..`N4` and their improved forms such as `N4^I2`.
pub fn spec_for_label(label: &str, c: f64) -> Option<EstimatorSpec> {
    let (head, improved) = match label.split_once('^') {
        Some((h, _)) => (h, true),
        None => (label, false),
    };
    let base = match head {
        "N1" => BaseEstimator::N1,
        "N2" => BaseEstimator::N2,
        "N3" => BaseEstimator::N3,
        "N4" => BaseEstimator::N4 { c },
        _ => return None,
    };
    Some(if improved {
        EstimatorSpec::improved(base)
    } else {
        base.into()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub row: usize,
    pub means: MeanVectorPair,
    pub estimator: String,
    pub risk: RiskEstimate,
    pub high_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: GridSpec,
    pub reps: usize,
    pub master_seed: u64,
    /// row-major
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn cell(&self, row: usize, label: &str) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.row == row && c.estimator == label)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.high_variance)
    }
}

/// Stream for a grid cell; every column of a row shares it.
pub fn cell_stream(grid_index: u64, row: usize) -> u64 {
    stream_id(&[grid_index, row as u64, 0])
}

/// Evaluates every row in parallel on the current rayon pool.
pub fn risk_grid(grid: &GridSpec, reps: usize, master_seed: u64) -> Result<GridResult> {
    let specs: Vec<EstimatorSpec> = grid.columns.iter().map(|c| c.spec).collect();
    let rows: Vec<Result<Vec<GridCell>>> = grid
        .means
        .par_iter()
        .enumerate()
        .map(|(row, means)| {
            let config = SimConfig::new(*means, grid.cov, grid.a, reps, master_seed, specs.clone())?
                .with_stream(cell_stream(grid.grid_index, row));
            let risks = simulate_all(&config)?;
            Ok(grid
                .columns
                .iter()
                .zip(risks)
                .map(|(col, risk)| GridCell {
                    row,
                    means: *means,
                    estimator: col.label.clone(),
                    high_variance: risk.high_variance(),
                    risk,
                })
                .collect())
        })
        .collect();
    let mut cells = Vec::with_capacity(grid.means.len() * grid.columns.len());
    for r in rows {
        cells.extend(r?);
    }
    Ok(GridResult {
        spec: grid.clone(),
        reps,
        master_seed,
        cells,
    })
}

pub const CSV_HEADER: [&str; 9] = [
    "theta1_x", "theta1_y", "theta2_x", "theta2_y", "estimator", "risk", "std_error", "reps", "seed",
];

pub fn write_grid_csv<W: Write>(grid: &GridResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for c in &grid.cells {
        let m = &c.means;
        w.write_record([
            fmt_g(m.theta1.x),
            fmt_g(m.theta1.y),
            fmt_g(m.theta2.x),
            fmt_g(m.theta2.y),
            c.estimator.clone(),
            fmt_g(c.risk.mean_risk),
            c.risk.std_error.map_or_else(|| "NA".to_string(), fmt_g),
            c.risk.reps.to_string(),
            c.risk.master_seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text table: one row per mean configuration.
pub fn write_grid_text<W: Write>(grid: &GridResult, mut out: W) -> Result<()> {
    let (a, cov) = (grid.spec.a.a(), grid.spec.cov);
    writeln!(
        out,
        "{}: a = {}, sigma_xx = {}, sigma_yy = {}, rho = {}, c = {}, reps = {}, seed = {}",
        grid.spec.name,
        a,
        cov.sigma_xx(),
        cov.sigma_yy(),
        cov.rho(),
        grid.spec.c,
        grid.reps,
        grid.master_seed
    )?;
    write!(out, "{:>22}", "(theta1) / (theta2)")?;
    for col in &grid.spec.columns {
        write!(out, " {:>10}", col.label)?;
    }
    writeln!(out)?;
    for (row, m) in grid.spec.means.iter().enumerate() {
        let head = format!("({},{})/({},{})", m.theta1.x, m.theta1.y, m.theta2.x, m.theta2.y);
        write!(out, "{head:>22}")?;
        for col in &grid.spec.columns {
            let c = grid.cell(row, &col.label).expect("complete grid");
            let mark = if c.high_variance { "*" } else { " " };
            write!(out, " {:>9.4}{mark}", c.risk.mean_risk)?;
        }
        writeln!(out)?;
    }
    if grid.flagged().next().is_some() {
        writeln!(out, "* standard error above {}% of the risk", HIGH_VARIANCE_RATIO * 100.0)?;
    }
    Ok(())
}

/// `printf("%g")`: six significant digits, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
