//! Command-line entry point.
//!
//! Every subcommand reads a JSON [`RunConfig`]; flags override the matching
//! config entries. Results go to stdout as one line of JSON (or CSV for
//! `sweep`) unless an output path is given, and a short human summary goes
//! to stderr. Exit codes: 0 success, 1 bound violation (`verify` only),
//! 2 any configuration, I/O or solver error, reported as a one-line JSON
//! object `{"error": kind, "message": ..}` on stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{validate_grids, RunConfig};
use crate::geometry::{orbit_geometry, ricci_profile};
use crate::lab::{self, LabOptions, SweepParam, SweepRow, Verdict};
use crate::spectral::{self, OperatorKind};
use crate::warp::RadialGrid;
use crate::{LabError, Result};

pub const THREADS_ENV: &str = "COHOMLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cohomlab", version, about = "Invariant-field spectra and curvature bounds on warped-product manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Vector,
    Scalar,
}

impl From<Kind> for OperatorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Vector => OperatorKind::RoughVector,
            Kind::Scalar => OperatorKind::ScalarLaplacian,
        }
    }
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Number of grid intervals (overrides grid.N)
    #[arg(long)]
    grid: Option<usize>,
    /// Write the JSON report here instead of stdout (overrides output.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit geometry and Ricci curvature of the profile
    Geometry {
        #[command(flatten)]
        common: Common,
        /// Per-node CSV: r, phi, H, B2, w, ric_radial, ric_tangential
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Smallest vector or first nonzero scalar eigenvalue
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "vector")]
        kind: Kind,
        #[arg(long)]
        tol: Option<f64>,
        /// Also solve on N/2 and report the Richardson value
        #[arg(long)]
        richardson: bool,
        /// Eigenfunction CSV: r, f
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the bound, the rigidity diagnostics and the first-eigenvalue criterion
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tol: Option<f64>,
        /// Fixed discretisation tolerance instead of the grid-halving estimate
        #[arg(long)]
        tol_disc: Option<f64>,
    },
    /// Verify over a one-parameter family; CSV rows
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary (k, eps, c or a; overrides sweep.param)
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated values (overrides sweep.values)
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Eigenvalue on a sequence of grids with observed orders
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "vector")]
        kind: Kind,
        /// Comma-separated, strictly increasing grid sizes (overrides converge.grids)
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
        #[arg(long)]
        tol: Option<f64>,
        /// Table CSV: N, lambda
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

impl clap::builder::ValueParserFactory for SweepParam {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<SweepParam>().map_err(|e| e.to_string()))
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
}

fn error_line(err: &LabError) -> String {
    let path = match err {
        LabError::Config { path, .. } => Some(path.as_str()),
        _ => None,
    };
    serde_json::to_string(&ErrorLine { error: err.kind(), message: err.to_string(), path }).expect("error serializes")
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            let err = LabError::InvalidArgument(e.kind().to_string());
            println!("{}", error_line(&err));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            println!("{}", error_line(&err));
            2
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(n) = common.grid {
        config.grid.intervals = n;
    }
    if let Some(out) = &common.out {
        config.output.json = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn set_tol(config: &mut RunConfig, tol: Option<f64>) -> Result<()> {
    if let Some(t) = tol {
        config.solver.tol = t;
    }
    config.validate()
}

/// Compact JSON with keys in a fixed (sorted) order.
fn to_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report serializes");
    serde_json::to_string(&value).expect("value serializes")
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| LabError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| LabError::Io(e.to_string()))
        }
    }
}

fn emit_json<T: Serialize>(config: &RunConfig, value: &T) -> Result<()> {
    let mut text = to_json(value);
    text.push('\n');
    write_text(config.output.json.as_deref(), &text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| LabError::Io(format!("cannot write {}: {e}", path.display())))
}

fn csv_error(e: impl std::fmt::Display) -> LabError {
    LabError::Io(format!("csv: {e}"))
}

/// Shortest round-trip form, matching the JSON output.
fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("float serializes")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| LabError::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Geometry { common, csv } => geometry(&load(&common)?, csv),
        Command::Spectrum { common, kind, tol, richardson, csv } => {
            let mut config = load(&common)?;
            set_tol(&mut config, tol)?;
            config.solver.richardson |= richardson;
            spectrum(&config, kind.into(), csv)
        }
        Command::Verify { common, tol, tol_disc } => {
            let mut config = load(&common)?;
            if tol_disc.is_some() {
                config.solver.tol_disc = tol_disc;
            }
            set_tol(&mut config, tol)?;
            verify(&config)
        }
        Command::Sweep { common, param, values, tol } => {
            let mut config = load(&common)?;
            set_tol(&mut config, tol)?;
            sweep(&mut config, param, values)
        }
        Command::Converge { common, kind, grids, tol, csv } => {
            let mut config = load(&common)?;
            set_tol(&mut config, tol)?;
            converge(&config, kind.into(), grids, csv)
        }
    }
}

#[derive(Serialize)]
struct GeometrySummary {
    kappa2: f64,
    ric_min: f64,
    argmin_r: f64,
    #[serde(rename = "grid_N")]
    grid_n: usize,
}

fn geometry(config: &RunConfig, csv: Option<PathBuf>) -> Result<i32> {
    let profile = config.profile()?;
    let grid = RadialGrid::for_profile(&profile, config.grid.intervals)?;
    let geom = orbit_geometry(&profile, &grid)?;
    let ricci = ricci_profile(&profile, &grid)?;
    if let Some(path) = csv.or_else(|| config.output.csv.clone()) {
        let rows = grid.regular_nodes().map(|i| {
            vec![
                num(grid.node(i)),
                num(geom.phi()[i]),
                num(geom.h_at(i)),
                num(geom.b2_at(i)),
                num(geom.weight()[i]),
                num(ricci.radial_at(i)),
                num(ricci.tangential_at(i)),
            ]
        });
        write_rows(&path, &["r", "phi", "H", "B2", "w", "ric_radial", "ric_tangential"], rows)?;
    }
    eprintln!(
        "geometry: kappa2 = {:.10}, ric_min = {:.10} at r = {:.6} (N = {})",
        ricci.kappa2, ricci.ric_min, ricci.argmin_r, grid.intervals()
    );
    emit_json(
        config,
        &GeometrySummary {
            kappa2: ricci.kappa2,
            ric_min: ricci.ric_min,
            argmin_r: ricci.argmin_r,
            grid_n: grid.intervals(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SpectrumSummary {
    kind: OperatorKind,
    lambda: f64,
    lambda_extrapolated: Option<f64>,
    #[serde(rename = "grid_N")]
    grid_n: usize,
    residual: f64,
    iterations: usize,
    rayleigh: f64,
}

fn spectrum(config: &RunConfig, kind: OperatorKind, csv: Option<PathBuf>) -> Result<i32> {
    let profile = config.profile()?;
    let opts = config.solver_options();
    let n = config.grid.intervals;
    let result = if config.solver.richardson {
        spectral::principal_mode_extrapolated(&profile, kind, n, &opts)?
    } else {
        spectral::principal_mode(&profile, kind, n, &opts)?
    };
    if let Some(path) = csv.or_else(|| config.output.csv.clone()) {
        let grid = RadialGrid::for_profile(&profile, n)?;
        let values = result.eigenfunction.values();
        let rows = (0..=n).map(|i| vec![num(grid.node(i)), num(values[i])]);
        write_rows(&path, &["r", "f"], rows)?;
    }
    eprintln!(
        "spectrum: lambda = {:.12} after {} iterations (residual {:.2e}, N = {})",
        result.lambda, result.iterations, result.residual, n
    );
    emit_json(
        config,
        &SpectrumSummary {
            kind,
            lambda: result.lambda,
            lambda_extrapolated: result.extrapolated,
            grid_n: n,
            residual: result.residual,
            iterations: result.iterations,
            rayleigh: result.rayleigh,
        },
    )?;
    Ok(0)
}

fn lab_options(config: &RunConfig) -> LabOptions {
    LabOptions { intervals: config.grid.intervals, solver: config.solver_options(), tol_disc: config.solver.tol_disc }
}

fn verify(config: &RunConfig) -> Result<i32> {
    let profile = config.profile()?;
    let report = lab::check_bound(&profile, &lab_options(config))?;
    eprintln!(
        "verify: {} with kappa2 = {:.10}, lambda_min = {:.10}, gap = {:.3e} (tol_disc {:.1e})",
        report.verdict, report.kappa2, report.lambda_min, report.gap, report.tol_disc
    );
    emit_json(config, &report)?;
    let violated = report.verdict != Verdict::HypothesisNotMet && !report.bound_holds;
    Ok(if violated { 1 } else { 0 })
}

fn sweep(config: &mut RunConfig, param: Option<SweepParam>, values: Option<Vec<f64>>) -> Result<i32> {
    let base = config
        .preset_kind()
        .ok_or_else(|| LabError::InvalidArgument("sampled profiles cannot be swept".into()))?;
    let mut spec = config.sweep.clone().unwrap_or(crate::config::SweepSpec {
        param: param.unwrap_or(SweepParam::Eps),
        values: None,
        start: None,
        stop: None,
        step: None,
    });
    if let Some(p) = param {
        spec.param = p;
    }
    if values.is_some() {
        spec.values = values;
    }
    config.sweep = Some(spec.clone());
    config.validate()?;
    let values = spec.resolved_values()?;
    let threads = threads_from_env()?;
    let rows = lab::sweep(base, config.n, spec.param, &values, &lab_options(config), threads)?;

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("sweep: {} rows over {}, {} failed", rows.len(), spec.param, failed);

    let text = sweep_csv(&rows)?;
    write_text(config.output.json.as_deref().or(config.output.csv.as_deref()), &text)?;
    Ok(0)
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["param", "kappa2", "lambda_min", "gap", "obata_defect", "verdict", "error"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            num(r.param),
            opt_num(r.kappa2),
            opt_num(r.lambda_min),
            opt_num(r.gap),
            opt_num(r.obata_defect),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn converge(config: &RunConfig, kind: OperatorKind, grids: Option<Vec<usize>>, csv: Option<PathBuf>) -> Result<i32> {
    let profile = config.profile()?;
    let grids = grids
        .or_else(|| config.converge.as_ref().map(|c| c.grids.clone()))
        .ok_or_else(|| LabError::InvalidArgument("no grids given (use --grids or converge.grids)".into()))?;
    validate_grids(&grids).map_err(|detail| LabError::Config { path: "converge.grids".into(), detail })?;
    // single worker: only sweeps run in parallel from the command line
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let study = pool.install(|| spectral::convergence_study(&profile, kind, &grids, &config.solver_options()))?;
    if let Some(path) = csv.or_else(|| config.output.csv.clone()) {
        let rows = study.rows.iter().map(|r| vec![r.intervals.to_string(), num(r.lambda)]);
        write_rows(&path, &["N", "lambda"], rows)?;
    }
    eprintln!("converge: observed orders {:?}", study.orders);
    emit_json(config, &study)?;
    Ok(0)
}
