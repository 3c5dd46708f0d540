//! Command-line front end for `driftwatch-core`: calibration, run-length
//! studies, and monitoring of CSV, norm or graymap streams.

pub mod documents;
pub mod error;
pub mod limits_file;
pub mod observations;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftwatch_core::experiments::SensitivityCell;
use driftwatch_core::sampling::covariance_structured;
use driftwatch_core::{
    calibrate, ic_study, ooc_study, sensitivity_grid, CalibrationSettings, DistributionSpec, Monitor,
    RunLengthSummary, StepOutcome, WindowConfig,
};

pub use error::{CliError, Result};
use observations::{Item, ObservationSource};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_SIGNAL: u8 = 2;

pub const TRACE_HEADER: [&str; 5] = ["window", "statistic", "limit", "signal", "tau_hat"];

#[derive(Debug, Parser)]
#[command(name = "driftwatch", version, about = "Distribution-free change-point monitoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate control limits by Monte Carlo and write them as JSON.
    Calibrate(CalibrateArgs),
    /// In-control run-length study against a limits file.
    EvalIc(EvalIcArgs),
    /// Planted-change study described by a scenario document.
    EvalOoc(EvalOocArgs),
    /// Detection rates over a grid document.
    Sensitivity(SensitivityArgs),
    /// Monitor a stream and write the trace CSV. Exits 2 if a signal is raised.
    Monitor(MonitorArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Source {
    Uniform,
    Normal,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub w: usize,
    #[arg(long)]
    pub l0: usize,
    #[arg(long, default_value_t = CalibrationSettings::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = CalibrationSettings::DEFAULT_REPLICATIONS)]
    pub reps: usize,
    /// Windows to simulate per replicate.
    #[arg(long, default_value_t = 2000)]
    pub windows: usize,
    #[arg(long, env = "DRIFTWATCH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Source::Uniform)]
    pub source: Source,
    /// Dimension of the normal source.
    #[arg(long, default_value_t = 25)]
    pub p: usize,
    #[arg(long, default_value_t = CalibrationSettings::DEFAULT_SURVIVOR_FLOOR)]
    pub survivor_floor: usize,
    #[arg(long, default_value_t = CalibrationSettings::DEFAULT_TAIL_POOL)]
    pub tail_pool: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Dist {
    Normal,
    T5,
    Cauchy,
    GaussianCopula,
    ClaytonCopula,
    UniformNorms,
}

#[derive(Debug, Args)]
pub struct EvalIcArgs {
    #[arg(long)]
    pub limits: PathBuf,
    #[arg(long, value_enum)]
    pub dist: Dist,
    #[arg(long, default_value_t = 25)]
    pub p: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Runs still silent after this many windows are censored.
    #[arg(long, default_value_t = 50_000)]
    pub max_windows: usize,
    #[arg(long, env = "DRIFTWATCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Table output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalOocArgs {
    #[arg(long)]
    pub limits: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// Windows monitored per replicate.
    #[arg(long, default_value_t = 2000)]
    pub horizon: usize,
    #[arg(long, env = "DRIFTWATCH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, env = "DRIFTWATCH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("stream").required(true).args(["input", "images", "norms"])))]
pub struct MonitorArgs {
    #[arg(long)]
    pub limits: PathBuf,
    /// CSV of observation vectors, one per row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory of .pgm images, read in file-name order.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// CSV with one precomputed norm per row.
    #[arg(long)]
    pub norms: Option<PathBuf>,
    /// Skip the first CSV row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep monitoring after a signal, starting a fresh window.
    #[arg(long)]
    pub restart: bool,
}

/// Parses `args` (including the program name) and runs the command, writing
/// reports to `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<u8> {
    match command {
        Command::Calibrate(a) => cmd_calibrate(a, stdout),
        Command::EvalIc(a) => cmd_eval_ic(a, stdout),
        Command::EvalOoc(a) => cmd_eval_ooc(a, stdout),
        Command::Sensitivity(a) => cmd_sensitivity(a, stdout),
        Command::Monitor(a) => cmd_monitor(a, stdout),
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn cmd_calibrate(a: CalibrateArgs, stdout: &mut dyn Write) -> Result<u8> {
    let cfg = WindowConfig::new(a.w, a.l0)?;
    if a.windows == 0 {
        return Err(CliError::Usage("--windows must be at least 1".into()));
    }
    let source = match a.source {
        Source::Uniform => DistributionSpec::UniformNorms,
        Source::Normal => DistributionSpec::structured_normal(a.p, 0.5, 0.0)?,
    };
    let settings = CalibrationSettings {
        alpha: a.alpha,
        replications: a.reps,
        sequence_length: a.windows + a.w - 1,
        survivor_floor: a.survivor_floor,
        tail_pool: a.tail_pool,
        source,
        ..CalibrationSettings::new(cfg, a.seed)
    };
    let cal = calibrate(&settings)?;
    limits_file::write_limits(&cal.limits, &a.out)?;
    let l = &cal.limits;
    writeln!(
        stdout,
        "wrote {}: h_1 = {:.4}, estimated through window {}, tail limit {:.4}",
        a.out.display(),
        l.limit(1),
        l.estimated_through(),
        l.tail_limit()
    )
    .map_err(stdout_err)?;
    Ok(EXIT_OK)
}

fn ic_spec(dist: Dist, p: usize) -> Result<DistributionSpec> {
    Ok(match dist {
        Dist::Normal => DistributionSpec::structured_normal(p, 0.5, 0.0)?,
        Dist::T5 => DistributionSpec::student_t(5.0, covariance_structured(p, 0.5)?)?,
        Dist::Cauchy => DistributionSpec::student_t(1.0, covariance_structured(p, 0.5)?)?,
        Dist::GaussianCopula => DistributionSpec::structured_gaussian_copula(p, 0.5, 1.0)?,
        Dist::ClaytonCopula => DistributionSpec::clayton_copula(p, 1.0, 1.0)?,
        Dist::UniformNorms => DistributionSpec::UniformNorms,
    })
}

/// Writes a CSV table to `out` or, when absent, to `stdout`.
fn write_table(out: Option<&Path>, stdout: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::format(out.unwrap_or(Path::new("<stdout>")), e);
    buf.write_record(header).map_err(csv_err)?;
    for r in rows {
        buf.write_record(r).map_err(csv_err)?;
    }
    let bytes = buf.into_inner().map_err(|e| CliError::format("<table>", e))?;
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => stdout.write_all(&bytes).map_err(stdout_err),
    }
}

fn opt(v: Option<impl ToString>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

const OOC_HEADER: [&str; 11] =
    ["label", "w", "l0", "tau", "reps", "horizon", "mrl", "arl", "median_tau_hat", "detection_rate", "false_alarms"];

fn ooc_row(label: &str, w: usize, l0: usize, tau: usize, s: &RunLengthSummary) -> Vec<String> {
    vec![
        label.to_string(),
        w.to_string(),
        l0.to_string(),
        tau.to_string(),
        s.n_runs.to_string(),
        s.horizon.to_string(),
        s.mrl.to_string(),
        s.arl.to_string(),
        opt(s.median_tau_hat),
        opt(s.detection_rate),
        opt(s.false_alarms),
    ]
}

fn cmd_eval_ic(a: EvalIcArgs, stdout: &mut dyn Write) -> Result<u8> {
    let limits = limits_file::read_limits(&a.limits)?;
    let spec = ic_spec(a.dist, a.p)?;
    let s = ic_study(&limits, &spec, a.reps, a.max_windows, a.seed)?;
    let dist = a.dist.to_possible_value().expect("no skipped variants").get_name().to_string();
    let cfg = limits.config();
    let row = vec![
        dist,
        spec.dimension().to_string(),
        cfg.w().to_string(),
        cfg.l0().to_string(),
        s.n_runs.to_string(),
        s.arl.to_string(),
        s.mrl.to_string(),
        s.censored.to_string(),
        s.horizon.to_string(),
    ];
    let header = ["dist", "p", "w", "l0", "reps", "arl", "mrl", "censored", "max_windows"];
    write_table(a.out.as_deref(), stdout, &header, &[row])?;
    Ok(EXIT_OK)
}

fn cmd_eval_ooc(a: EvalOocArgs, stdout: &mut dyn Write) -> Result<u8> {
    let limits = limits_file::read_limits(&a.limits)?;
    let scenario = documents::read_scenario(&a.scenario)?;
    let s = ooc_study(&limits, &scenario, a.reps, a.horizon, a.seed)?;
    let label = a.scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let cfg = limits.config();
    write_table(a.out.as_deref(), stdout, &OOC_HEADER, &[ooc_row(&label, cfg.w(), cfg.l0(), scenario.tau, &s)])?;
    Ok(EXIT_OK)
}

fn cmd_sensitivity(a: SensitivityArgs, stdout: &mut dyn Write) -> Result<u8> {
    let grid = documents::read_grid(&a.grid)?;
    let limits = grid.limits.iter().map(|p| limits_file::read_limits(p)).collect::<Result<Vec<_>>>()?;
    let scenarios = grid.scenario.iter().map(|s| Ok((s, s.build()?))).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for (doc, scenario) in &scenarios {
        for l in &limits {
            cells.push(SensitivityCell { label: doc.label.clone(), limits: l, scenario });
        }
    }
    let rows = sensitivity_grid(&cells, a.reps, grid.horizon, a.seed)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .zip(&cells)
        .map(|(r, c)| ooc_row(&r.label, r.w, r.l0, c.scenario.tau, &r.summary))
        .collect();
    write_table(a.out.as_deref(), stdout, &OOC_HEADER, &table)?;
    Ok(EXIT_OK)
}

fn cmd_monitor(a: MonitorArgs, stdout: &mut dyn Write) -> Result<u8> {
    let limits = limits_file::read_limits(&a.limits)?;
    let source = match (&a.input, &a.images, &a.norms) {
        (Some(p), None, None) => ObservationSource::CsvRows { path: p.clone(), has_header: a.header },
        (None, Some(p), None) => ObservationSource::ImageDir { path: p.clone() },
        (None, None, Some(p)) => ObservationSource::NormColumn { path: p.clone(), has_header: a.header },
        _ => return Err(CliError::Usage("give exactly one of --input, --images, --norms".into())),
    };
    let file = fs::File::create(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let mut trace = csv::Writer::from_writer(io::BufWriter::new(file));
    let trace_err = |e: csv::Error| CliError::format(&a.out, e);
    trace.write_record(TRACE_HEADER).map_err(trace_err)?;

    let cfg = limits.config();
    let mut monitor = Monitor::new(cfg, limits)?.with_restart(a.restart).with_trace(false);
    let mut signals = 0usize;
    let mut seen = 0usize;
    for item in source.open()? {
        seen += 1;
        let outcome = match item? {
            Item::Vector(y) => monitor.push_observation(&y),
            Item::Norm(d) => monitor.push_norm(d),
        }
        .map_err(|e| CliError::Usage(format!("observation {seen}: {e}")))?;
        match outcome {
            StepOutcome::Warming => {}
            StepOutcome::Point { window, statistic, limit } => {
                trace
                    .write_record([window.to_string(), statistic.to_string(), limit.to_string(), "0".into(), String::new()])
                    .map_err(trace_err)?;
            }
            StepOutcome::Raised(s) => {
                signals += 1;
                trace
                    .write_record([
                        s.window.to_string(),
                        s.statistic.to_string(),
                        s.limit.to_string(),
                        "1".into(),
                        s.tau_hat.to_string(),
                    ])
                    .map_err(trace_err)?;
                writeln!(
                    stdout,
                    "signal at window {}: T = {:.4} >= h = {:.4}; {} extremum at partition {}; estimated change-point tau_hat = {} (observation {} of the input)",
                    s.window,
                    s.statistic,
                    s.limit,
                    s.side.as_str(),
                    s.partition_index,
                    s.tau_hat,
                    s.absolute_tau_hat()
                )
                .map_err(stdout_err)?;
                if !a.restart {
                    break;
                }
            }
        }
    }
    trace.flush().map_err(|e| CliError::io(&a.out, e))?;
    if signals == 0 {
        writeln!(stdout, "no signal in {seen} observations").map_err(stdout_err)?;
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_SIGNAL)
    }
}
