//! Command-line front end: argument parsing, command dispatch and exit codes.
//!
//! Exit codes: 0 success, 1 file, parse or usage error, 2 infeasible model,
//! unphysical covariance or biased measurement, 3 solver or verification failure.

pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use qcrb::bounds;
use qcrb::fixtures::{self, FIXTURES};
use qcrb::gaussian::{self, GaussianMeasurement};
use qcrb::holevo::{self, BasisReduction, HolevoOptions};
use qcrb::io;
use qcrb::linalg::{min_eigenvalue_real, DEFAULT_RANK_TOL};
use qcrb::model::{self, QuantumModel};
use qcrb::povm;
use qcrb::Error;

use report::{
    render_csv, render_json, render_text, BoundReport, FixtureEntry, GaussianReport, PovmReport,
    Timings, Tolerances,
};

#[derive(Debug, Parser)]
#[command(name = "qcrb", version, about = "Helstrom, D-invariant and Holevo bounds for quantum estimation models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute c_gs, c_h, c_d and 2 c_gs for a model file or built-in fixture.
    Bounds(BoundsArgs),
    /// QFIM, general-dyne FIM and the half-QFIM check for a Gaussian shift model.
    Gaussian(GaussianArgs),
    /// Audit a POVM with estimates against a model.
    CheckPovm(CheckPovmArgs),
    /// Bounds of a fixture over a grid of one parameter, as CSV.
    Sweep(SweepArgs),
    /// List or export the built-in fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Basis {
    Support,
    Full,
}

impl From<Basis> for BasisReduction {
    fn from(b: Basis) -> Self {
        match b {
            Basis::Support => BasisReduction::Support,
            Basis::Full => BasisReduction::Full,
        }
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Relative duality-gap target of the SDP.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Relative eigenvalue cutoff for ranks and pseudoinverses.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Operator basis of the Holevo program.
    #[arg(long, value_enum, default_value_t = Basis::Support)]
    basis: Basis,
}

impl SolverArgs {
    fn options(&self) -> Result<HolevoOptions, CliError> {
        if !(self.tol > 0.0) || !(self.rank_tol > 0.0) || self.max_iter == 0 {
            return Err(CliError::usage("--tol, --rank-tol and --max-iter must be positive"));
        }
        Ok(HolevoOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            rank_tol: self.rank_tol,
            reduction: self.basis.into(),
        })
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol: self.tol,
            max_iter: self.max_iter,
            rank_tol: self.rank_tol,
            basis: self.basis.into(),
        }
    }
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// Comma-separated fixture parameters.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Vec<f64>,
    /// Seed for randomized fixtures (prepended to --params).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Model JSON file.
    #[arg(required_unless_present = "fixture", conflicts_with = "fixture")]
    model: Option<PathBuf>,
    /// Use a built-in fixture instead of a file.
    #[arg(long)]
    fixture: Option<String>,
    #[command(flatten)]
    fixture_args: FixtureArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include the optimal influence operators.
    #[arg(long)]
    include_x: bool,
    /// Include wall-clock timings (makes output non-deterministic).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct GaussianArgs {
    /// Gaussian model JSON file.
    model: PathBuf,
    /// Measurement covariance file `{"cm": [[...]]}`; defaults to sigma_m = sigma.
    #[arg(long)]
    measurement_cm: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct CheckPovmArgs {
    /// POVM JSON file with elements and estimates.
    povm: PathBuf,
    /// Model JSON file.
    model: PathBuf,
    /// True value of beta at the evaluation point (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Grid {
    start: f64,
    stop: f64,
    count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err("expected start:stop:count".into());
        };
        let start: f64 = a.parse().map_err(|e| format!("start: {e}"))?;
        let stop: f64 = b.parse().map_err(|e| format!("stop: {e}"))?;
        let count: usize = n.parse().map_err(|e| format!("count: {e}"))?;
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err("count must be positive and endpoints finite".into());
        }
        Ok(Self { start, stop, count })
    }
}

impl Grid {
    fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    fixture: String,
    /// Evenly spaced grid `start:stop:count`, endpoints included.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "values", conflicts_with = "values")]
    grid: Option<Grid>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
    /// Remaining fixture parameters, in order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed: Vec<f64>,
    /// Position of the swept parameter among the fixture parameters.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Seed for randomized fixtures.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum FixturesCommand {
    /// List the built-in fixtures.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write a fixture as a model JSON file.
    Export {
        name: String,
        #[command(flatten)]
        fixture_args: FixtureArgs,
        /// Output path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InfeasibleModel { .. }
        | Error::UnphysicalCovariance { .. }
        | Error::NotLocallyUnbiased { .. }
        | Error::IllDefinedFim { .. } => 2,
        Error::Solver(_)
        | Error::VerificationFailed(_)
        | Error::BoundOrderingViolated(_)
        | Error::ResidualTooLarge { .. }
        | Error::Singular(_) => 3,
        _ => 1,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Report text plus exit code; a nonzero code may still carry a report.
struct Outcome {
    stdout: String,
    code: i32,
    note: Option<String>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            code: 0,
            note: None,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(outcome) => {
            let _ = out.write_all(outcome.stdout.as_bytes());
            if let Some(note) = outcome.note {
                let _ = writeln!(err, "error: {note}");
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Gaussian(args) => cmd_gaussian(args),
        Command::CheckPovm(args) => cmd_check_povm(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fixtures(FixturesCommand::List { format }) => cmd_fixtures_list(*format),
        Command::Fixtures(FixturesCommand::Export {
            name,
            fixture_args,
            output,
        }) => cmd_fixtures_export(name, fixture_args, output.as_deref()),
    }
}

fn fixture_params(name: &str, params: &[f64], seed: Option<u64>) -> Result<Vec<f64>, CliError> {
    match seed {
        None => Ok(params.to_vec()),
        Some(seed) if name == "random_full_rank" => {
            let mut full = vec![seed as f64];
            full.extend_from_slice(params);
            Ok(full)
        }
        Some(_) => Err(CliError::usage(format!("fixture {name} takes no --seed"))),
    }
}

fn load_fixture(name: &str, args: &FixtureArgs) -> Result<QuantumModel, CliError> {
    let params = fixture_params(name, &args.params, args.seed)?;
    Ok(fixtures::fixture(name, &params)?)
}

fn no_csv(format: Format, what: &str) -> Result<(), CliError> {
    if format == Format::Csv {
        return Err(CliError::usage(format!("{what} has no CSV form; use text or json")));
    }
    Ok(())
}

fn render<T: serde::Serialize>(report: &T, format: Format) -> String {
    match format {
        Format::Json => render_json(report),
        _ => render_text(report),
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// validate, SLDs, information, feasibility, closed forms, SDP and verification.
fn compute_bounds(
    model: &QuantumModel,
    solver: &SolverArgs,
    include_x: bool,
) -> Result<(BoundReport, Option<String>, Timings), CliError> {
    let opts = solver.options()?;
    let start = Instant::now();
    let diagnostics = model::validate(model, opts.rank_tol)?;
    let slds = qcrb::sld::compute_slds(model, opts.rank_tol)?;
    let info = qcrb::sld::information(model, &slds, opts.rank_tol)?;
    let mut report = BoundReport {
        model_label: model.label().to_string(),
        feasible: true,
        infeasible_column: None,
        c_gs: None,
        c_h: None,
        c_d: None,
        two_c_gs: None,
        duality_gap: None,
        dual_bound: None,
        status: None,
        iterations: None,
        rho_rank: diagnostics.rho_rank,
        qfim_rank: info.qfim_rank,
        tolerances: solver.tolerances(),
        timings: None,
        x_opt: None,
    };
    if let Err(e) = qcrb::sld::ensure_feasible(&info, model.dbeta(), qcrb::sld::FEASIBILITY_TOL) {
        if let Error::InfeasibleModel { column, .. } = e {
            report.feasible = false;
            report.infeasible_column = Some(column);
            let timings = Timings {
                analysis_ms: elapsed_ms(start),
                holevo_ms: 0.0,
            };
            return Ok((report, Some(e.to_string()), timings));
        }
        return Err(e.into());
    }
    let analysis = bounds::LocalAnalysis {
        diagnostics,
        slds,
        info,
    };
    let closed = bounds::closed_form(model, &analysis)?;
    let analysis_ms = elapsed_ms(start);
    let start = Instant::now();
    let problem = holevo::build_from_bounds(model, &closed, opts.rank_tol, opts.reduction)?;
    let sol = holevo::solve(&problem, &opts)?;
    holevo::verify_solution(model, &closed, &sol)?;
    let holevo_ms = elapsed_ms(start);
    report.c_gs = Some(closed.c_gs);
    report.c_h = Some(sol.c_h);
    report.c_d = Some(closed.c_d);
    report.two_c_gs = Some(closed.two_c_gs());
    report.duality_gap = Some(sol.duality_gap);
    report.dual_bound = Some(sol.dual_bound);
    report.status = Some(sol.status);
    report.iterations = Some(sol.iterations);
    if include_x {
        report.x_opt = Some(sol.x_opt.iter().map(|x| io::complex_to_rows(x.matrix())).collect());
    }
    Ok((
        report,
        None,
        Timings {
            analysis_ms,
            holevo_ms,
        },
    ))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Outcome, CliError> {
    let model = match (&args.model, &args.fixture) {
        (Some(path), _) => model::load_model(path)?,
        (None, Some(name)) => load_fixture(name, &args.fixture_args)?,
        (None, None) => return Err(CliError::usage("a model file or --fixture is required")),
    };
    let (mut report, note, timings) = compute_bounds(&model, &args.solver, args.include_x)?;
    if args.timings {
        report.timings = Some(timings);
    }
    let stdout = match args.format {
        Format::Csv => render_csv(&[report.csv_row(report.model_label.clone())]),
        other => render(&report, other),
    };
    Ok(Outcome {
        stdout,
        code: if report.feasible { 0 } else { 2 },
        note,
    })
}

fn cmd_gaussian(args: &GaussianArgs) -> Result<Outcome, CliError> {
    no_csv(args.format, "gaussian")?;
    let model = gaussian::load_gaussian_model(&args.model)?;
    let matched = GaussianMeasurement::new(model.cm().clone())?;
    let (meas, kind) = match &args.measurement_cm {
        Some(path) => (gaussian::load_measurement(path)?, "file"),
        None => (matched.clone(), "matched"),
    };
    let qfim = gaussian::gaussian_qfim(&model)?;
    let fim = gaussian::gaussian_fim(&model, &meas)?;
    let half = gaussian::half_qfim_check(&model)?;
    let c_gs = gaussian::helstrom_bound(&model)?;
    let matched_bound = gaussian::classical_bound(&model, &matched)?;
    let classical_bound = match gaussian::classical_bound(&model, &meas) {
        Ok(v) => Some(v),
        Err(Error::InfeasibleModel { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let report = GaussianReport {
        model_label: model.label().to_string(),
        modes: model.modes(),
        measurement: kind,
        measurement_cm: io::real_to_rows(meas.cm()),
        min_eig_qfim_minus_fim: min_eigenvalue_real(&(&qfim - &fim)),
        qfim: io::real_to_rows(&qfim),
        fim: io::real_to_rows(&fim),
        half_qfim_deviation: half.max_dev,
        c_gs,
        two_c_gs: 2.0 * c_gs,
        matched_classical_bound: matched_bound,
        chained_deviation: (matched_bound - 2.0 * c_gs).abs(),
        classical_bound,
    };
    Ok(Outcome::ok(render(&report, args.format)))
}

fn cmd_check_povm(args: &CheckPovmArgs) -> Result<Outcome, CliError> {
    no_csv(args.format, "check-povm")?;
    let opts = args.solver.options()?;
    let measurement = povm::load_povm(&args.povm)?;
    let model = model::load_model(&args.model)?;
    let beta = if args.beta.is_empty() {
        DVector::zeros(model.num_targets())
    } else {
        DVector::from_vec(args.beta.clone())
    };
    let (residual, pass) = povm::check_local_unbiasedness(&measurement, &model, &beta)?;
    if !pass {
        return Err(Error::NotLocallyUnbiased { residual }.into());
    }
    let (dv, dz) = povm::matrix_crb_check(&measurement, &model, &beta)?;
    let report_data = povm::measurement_report(&measurement, &model, &beta)?;
    let (closed, sol) = holevo::holevo_bound(&model, &opts)?;
    holevo::verify_solution(&model, &closed, &sol)?;
    let report = PovmReport {
        model_label: model.label().to_string(),
        outcomes: measurement.num_outcomes(),
        beta: beta.iter().copied().collect(),
        unbias_residual: residual,
        probs: report_data.probs.iter().copied().collect(),
        trace_w_sigma: (model.weight() * &report_data.sigma).trace(),
        sigma: io::real_to_rows(&report_data.sigma),
        fim: io::real_to_rows(&report_data.fim),
        min_eig_sigma_minus_v: dv,
        min_eig_sigma_minus_z: dz,
        c_gs: closed.c_gs,
        c_h: sol.c_h,
        c_d: closed.c_d,
        two_c_gs: closed.two_c_gs(),
    };
    Ok(Outcome::ok(render(&report, args.format)))
}

fn cmd_sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    if FIXTURES.iter().all(|f| f.name != args.fixture) {
        return Err(Error::UnknownFixture(args.fixture.clone()).into());
    }
    if args.index > args.fixed.len() {
        return Err(CliError::usage(format!(
            "--index {} is out of range for {} fixed parameter(s)",
            args.index,
            args.fixed.len()
        )));
    }
    let points = match &args.grid {
        Some(grid) => grid.points(),
        None => args.values.clone(),
    };
    if points.is_empty() {
        return Err(CliError::usage("no sweep values"));
    }
    let mut rows = Vec::with_capacity(points.len());
    for &value in &points {
        let mut params = args.fixed.clone();
        params.insert(args.index, value);
        let params = fixture_params(&args.fixture, &params, args.seed)?;
        let model = fixtures::fixture(&args.fixture, &params)?;
        let (report, note, _) = compute_bounds(&model, &args.solver, false)?;
        if let Some(note) = note {
            return Err(CliError {
                code: 2,
                message: format!("at {value}: {note}"),
            });
        }
        rows.push(report.csv_row(report::csv_float(value)));
    }
    let stdout = match args.format {
        Format::Csv => render_csv(&rows),
        Format::Json => render_json(&rows),
        Format::Text => render_text(&rows),
    };
    Ok(Outcome::ok(stdout))
}

fn cmd_fixtures_list(format: Format) -> Result<Outcome, CliError> {
    let entries: Vec<FixtureEntry> = FIXTURES
        .iter()
        .map(|f| FixtureEntry {
            name: f.name,
            params: f.params,
            description: f.description,
        })
        .collect();
    let stdout = match format {
        Format::Json => render_json(&entries),
        Format::Text => entries
            .iter()
            .map(|e| format!("{:<20} {:<32} {}\n", e.name, e.params, e.description))
            .collect(),
        Format::Csv => return Err(CliError::usage("fixtures list has no CSV form")),
    };
    Ok(Outcome::ok(stdout))
}

fn cmd_fixtures_export(
    name: &str,
    args: &FixtureArgs,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    let model = load_fixture(name, args)?;
    match output {
        Some(path) => {
            model::save_model(&model, path)?;
            Ok(Outcome::ok(String::new()))
        }
        None => {
            let mut text = model.to_json_string()?;
            text.push('\n');
            Ok(Outcome::ok(text))
        }
    }
}
