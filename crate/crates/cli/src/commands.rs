use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use linexsel::data::{self, AnalysisReport, EstimateRow, FittedModel};
use linexsel::estimators::est_shift;
use linexsel::sim::{self, Column, GridResult, GridSpec, TableId};
use linexsel::{
    bounds, CovarianceSpec, Error, EstimatorSpec, LinexParams, MeanVectorPair, ObservationPair, Pair,
    PriorSpec, Truncation,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AdmissibilityArgs, AnalyzeArgs, Cli, Command, EstimateArgs, Format, SimulateArgs, TableSel};

pub const MANIFEST: &str = "manifest.json";
const DEFAULT_SIM_OUT: &str = "out";

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
    Runtime(String),
    /// stdout closed early, e.g. piped into `head`
    BrokenPipe,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::BrokenPipe => f.write_str("broken pipe"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                Error::InvalidLossParameter(_)
                | Error::InvalidCovariance(_)
                | Error::InvalidParameter(_)
                | Error::SingularCovariance { .. }
                | Error::OutsideCaseRegion { .. },
            ) => 2,
            _ => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        // core writers flatten io errors to text
        if matches!(&e, Error::Io(m) if m.contains("Broken pipe")) {
            return CliError::BrokenPipe;
        }
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return CliError::BrokenPipe;
        }
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub master_seed: u64,
    pub version: String,
    /// file names relative to the manifest
    pub outputs: Vec<String>,
}

/// Collects output files under `--out` and writes the manifest last.
struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
        }
        Ok(Outputs { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> linexsel::Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(self, subcommand: &str, parameters: Value, master_seed: u64) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let m = RunManifest {
            subcommand: subcommand.into(),
            parameters,
            master_seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.files,
        };
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => estimate(cli, a),
        Command::Admissibility(a) => admissibility(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Analyze(a) => analyze(cli, a),
    }
}

fn cov_of(v: &[f64]) -> Result<CovarianceSpec> {
    Ok(CovarianceSpec::new(v[0], v[1], v[2])?)
}

fn prior_of(v: &Option<[f64; 3]>) -> Result<Option<PriorSpec>> {
    v.as_ref().map(|p| PriorSpec::new(p[0], p[1], p[2])).transpose().map_err(Into::into)
}

fn stdout() -> io::StdoutLock<'static> {
    io::stdout().lock()
}

fn estimate(cli: &Cli, args: &EstimateArgs) -> Result<()> {
    let a = LinexParams::new(args.a)?;
    let cov = cov_of(&args.cov)?;
    let prior = prior_of(&args.prior)?;
    EstimatorSpec::n4(args.c)?;
    if prior.is_some() && cov.is_degenerate() {
        return Err(Error::SingularCovariance { rho: cov.rho() }.into());
    }
    let obs = ObservationPair::new(Pair::new(args.x[0], args.y[0]), Pair::new(args.x[1], args.y[1]))?;
    let (s, mut rows) = data::estimate_all(&obs, a, args.c, &cov, prior.as_ref())?;
    for &d in &args.d {
        rows.push(EstimateRow {
            label: EstimatorSpec::Shift { d }.to_string(),
            value: est_shift(&s, d),
            truncation: None,
        });
    }

    let emit = |w: &mut dyn Write| -> linexsel::Result<()> {
        match cli.format {
            Format::Text => {
                writeln!(
                    w,
                    "Selected population {}; a = {}, c = {}, T1 = {:.4}, T2 = {:.4}",
                    s.selected,
                    a.a(),
                    sim::fmt_g(args.c),
                    s.t1,
                    s.t2
                )?;
                data::write_rows_text(&rows, w)
            }
            Format::Csv => data::write_rows_csv(&rows, w),
        }
    };
    emit(&mut stdout())?;

    let mut out = Outputs::new(cli.out.clone())?;
    out.write(&format!("estimate.{}", cli.format.ext()), emit)?;
    let params = json!({
        "x": args.x, "y": args.y, "cov": args.cov, "a": args.a, "c": args.c,
        "d": args.d, "prior": args.prior, "selected": s.selected,
    });
    out.finish("estimate", params, cli.seed)
}

fn admissibility(cli: &Cli, args: &AdmissibilityArgs) -> Result<()> {
    let a = LinexParams::new(args.a)?;
    let cov = cov_of(&args.cov)?;
    let b = bounds(a, &cov);
    let class = args.d.map(|d| (d, b.classify(d), b.dominating_shift(d)));

    let emit = |w: &mut dyn Write| -> linexsel::Result<()> {
        match cli.format {
            Format::Text => {
                writeln!(w, "d0 = {:.10}", b.d0)?;
                writeln!(w, "d1 = {:.10}", b.d1)?;
                if let Some((d, c, dom)) = class {
                    match dom {
                        Some(s) => writeln!(w, "d = {d}: {c}, dominated by Y[2] + {s:.10}")?,
                        None => writeln!(w, "d = {d}: {c}")?,
                    }
                }
            }
            Format::Csv => {
                writeln!(w, "quantity,value")?;
                writeln!(w, "d0,{:.10}", b.d0)?;
                writeln!(w, "d1,{:.10}", b.d1)?;
                if let Some((d, c, dom)) = class {
                    writeln!(w, "d,{d}")?;
                    writeln!(w, "class,{c}")?;
                    writeln!(w, "dominating_shift,{}", dom.map_or_else(|| "NA".to_string(), |s| format!("{s:.10}")))?;
                }
            }
        }
        Ok(())
    };
    emit(&mut stdout())?;

    let mut out = Outputs::new(cli.out.clone())?;
    out.write(&format!("admissibility.{}", cli.format.ext()), emit)?;
    let params = json!({
        "cov": args.cov, "a": args.a, "d": args.d,
        "d0": b.d0, "d1": b.d1, "class": class.map(|c| c.1.as_str()),
    });
    out.finish("admissibility", params, cli.seed)
}

fn custom_grid(args: &SimulateArgs) -> Result<GridSpec> {
    let usage = |m: &str| CliError::Core(Error::InvalidParameter(m.into()));
    let cov = cov_of(args.cov.as_ref().ok_or_else(|| usage("either --table or --cov/--a/--means is required"))?)?;
    let a = LinexParams::new(args.a.ok_or_else(|| usage("--a is required with --cov"))?)?;
    if args.means.is_empty() {
        return Err(usage("--means is required with --cov"));
    }
    let means = args
        .means
        .iter()
        .map(|m| MeanVectorPair::new(Pair::new(m[0], m[1]), Pair::new(m[2], m[3])))
        .collect::<linexsel::Result<Vec<_>>>()?;
    let columns = args
        .estimators
        .iter()
        .map(|l| {
            let spec = sim::spec_for_label(l, args.c)
                .ok_or_else(|| usage(&format!("unknown estimator '{l}' (expected N1..N4, optionally with ^I)")))?;
            spec.validate()?;
            Ok(Column::new(l.clone(), spec))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSpec {
        name: "grid".into(),
        grid_index: 0,
        a,
        cov,
        c: args.c,
        means,
        columns,
    })
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    EstimatorSpec::n4(args.c)?;
    let grids = match args.table {
        Some(TableSel::One(n)) => vec![TableId::new(n)?.grid(args.c)],
        Some(TableSel::All) => TableId::ALL.iter().map(|t| t.grid(args.c)).collect(),
        None => vec![custom_grid(args)?],
    };
    let reps = args.reps as usize;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;

    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_SIM_OUT));
    let mut out = Outputs::new(Some(dir))?;
    for grid in &grids {
        let result = pool.install(|| sim::risk_grid(grid, reps, cli.seed))?;
        out.write(&format!("{}.csv", grid.name), |w| sim::write_grid_csv(&result, w))?;
        if cli.format == Format::Text {
            out.write(&format!("{}.txt", grid.name), |w| sim::write_grid_text(&result, w))?;
        }
        report_grid(cli.format, &result)?;
    }

    let params = json!({
        "table": match args.table {
            Some(TableSel::One(n)) => json!(n),
            Some(TableSel::All) => json!("all"),
            None => Value::Null,
        },
        "grids": grids,
        "reps": reps,
        "c": args.c,
    });
    out.finish("simulate", params, cli.seed)
}

fn report_grid(format: Format, result: &GridResult) -> Result<()> {
    let mut w = stdout();
    match format {
        Format::Text => {
            sim::write_grid_text(result, &mut w)?;
            writeln!(w)?;
        }
        Format::Csv => sim::write_grid_csv(result, &mut w)?,
    }
    for c in result.flagged() {
        let se = c.risk.std_error.unwrap_or(f64::NAN);
        eprintln!(
            "warning: {} row {} {}: risk {} has standard error {}",
            result.spec.name,
            c.row + 1,
            c.estimator,
            sim::fmt_g(c.risk.mean_risk),
            sim::fmt_g(se)
        );
    }
    Ok(())
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let a = LinexParams::new(args.a)?;
    EstimatorSpec::n4(args.c)?;
    let prior = prior_of(&args.prior)?;
    let mut dataset = match &args.path {
        Some(p) => data::load_dataset(p).map_err(|e| with_path(p, e))?,
        None => data::poultry_fixture(),
    };
    let replaced = if args.clean { dataset.clean() } else { 0 };
    let model = data::fit(&dataset)?;
    if prior.is_some() && model.cov_hat.is_degenerate() {
        return Err(Error::SingularCovariance { rho: model.cov_hat.rho() }.into());
    }
    let report = data::analyze(&model, a, args.c, prior.as_ref())?;

    write_analysis(cli.format, &model, &report, &mut stdout())?;

    let mut out = Outputs::new(cli.out.clone())?;
    let ext = cli.format.ext();
    out.write(&format!("fit.{ext}"), |w| match cli.format {
        Format::Text => data::write_fit_text(&model, w),
        Format::Csv => data::write_fit_csv(&model, w),
    })?;
    out.write(&format!("estimates.{ext}"), |w| match cli.format {
        Format::Text => data::write_report_text(&report, w),
        Format::Csv => data::write_rows_csv(&report.rows, w),
    })?;
    let params = json!({
        "input": args.path.as_ref().map_or_else(|| "bundled:poultry.csv".to_string(), |p| p.display().to_string()),
        "clean": args.clean,
        "values_replaced": replaced,
        "a": args.a,
        "c": args.c,
        "prior": args.prior,
        "denominator": model.denominator,
        "selected": report.selected_label,
        "truncated": report.rows.iter().filter(|r| matches!(r.truncation, Some(t) if t != Truncation::None)).count(),
    });
    out.finish("analyze", params, cli.seed)
}

fn write_analysis(format: Format, model: &FittedModel, report: &AnalysisReport, w: &mut dyn Write) -> Result<()> {
    match format {
        Format::Text => {
            data::write_fit_text(model, &mut *w)?;
            writeln!(w)?;
            data::write_report_text(report, &mut *w)?;
        }
        Format::Csv => {
            data::write_fit_csv(model, &mut *w)?;
            writeln!(w)?;
            data::write_rows_csv(&report.rows, &mut *w)?;
        }
    }
    Ok(())
}

fn with_path(p: &Path, e: Error) -> CliError {
    match e {
        Error::Parse { line, message } => CliError::Runtime(format!("{}: line {line}: {message}", p.display())),
        other => CliError::Core(other),
    }
}

