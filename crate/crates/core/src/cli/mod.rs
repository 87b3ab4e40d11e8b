//! The `materiel-pulse` command line.
//!
//! Every subcommand reads the file formats of [`crate::ingest`] (or the
//! wide series CSV of [`crate::timeseries`]), computes fully in memory,
//! and only then writes its outputs atomically. Diagnostics go to
//! standard error as `LEVEL<TAB>code<TAB>message` lines.

mod commands;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::timeseries::CountUnit;

pub use output::{Artifacts, Sink};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

const EXIT_HELP: &str = "\
Exit status:
  0   success, all declared outputs written
  2   input validation failed (bad record, unknown label, bad date range)
  3   numerical failure (rank deficiency, non-convergence, too little data)
  64  usage error (unknown flag, malformed value)
  66  an input file does not exist
  74  other I/O failure while reading or writing

Diagnostics are written to standard error as LEVEL<TAB>code<TAB>message.
The MATERIEL_PULSE_VOCAB environment variable may name a vocabulary file
(one label per line); --vocab takes precedence over it.";

/// Parsed command line: global options plus one subcommand.
#[derive(Clone, Debug, Parser)]
#[command(name = "materiel-pulse", version, about = "Weapon-imagery analytics from detection files to conflict-event econometrics", after_help = EXIT_HELP)]
pub struct RunConfig {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct GlobalOptions {
    /// Seed for every random draw (bootstrap, simulation) [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress INFO and WARN diagnostics
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Output format [default: json when --out ends in .json, else csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Label vocabulary file, one label per line [default: built-in 17 labels]
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Accept labels outside the vocabulary instead of rejecting them
    #[arg(long, global = true)]
    pub allow_unknown_labels: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `auto` (AIC up to --max-lag) or a fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LagChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for LagChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(LagChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(p) if p >= 1 => Ok(LagChoice::Fixed(p)),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FatalityKind {
    All,
    Attack,
    Other,
}

#[derive(Clone, Debug, Args)]
pub struct RangeArgs {
    /// First day of the series window [default: 2022-02-21]
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Last day of the series window [default: 2022-12-31]
    #[arg(long)]
    pub end: Option<NaiveDate>,
}

#[derive(Clone, Debug, Args)]
pub struct PrepArgs {
    /// Drop rows whose zero_day flag is set (requires a zero_day column)
    #[arg(long)]
    pub drop_zero_days: bool,
    /// Take first differences before estimation
    #[arg(long)]
    pub difference: bool,
}

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    /// Ignore detections below this confidence
    #[arg(long, default_value_t = 0.0)]
    pub conf_threshold: f64,
    /// Also report (and average into mAP) classes seen only among detections
    #[arg(long)]
    pub include_empty_classes: bool,
    /// Output path, `-` for stdout [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct EngagementArgs {
    #[arg(long)]
    pub posts: PathBuf,
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub conf_threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub posts: PathBuf,
    #[arg(long)]
    pub detections: PathBuf,
    /// Event file; adds attacks and fatalities columns
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value = "boxes", value_parser = parse_unit)]
    pub unit: CountUnit,
    #[arg(long, default_value_t = 0.0)]
    pub conf_threshold: f64,
    /// Event kinds whose fatalities are summed
    #[arg(long, value_enum, default_value_t = FatalityKind::All)]
    pub fatality_kind: FatalityKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_unit(s: &str) -> Result<CountUnit, String> {
    s.parse()
}

#[derive(Clone, Debug, Args)]
pub struct GrangerArgs {
    /// Wide series CSV
    #[arg(long)]
    pub series: PathBuf,
    /// Cause column(s), comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub cause: Vec<String>,
    /// Effect column
    #[arg(long)]
    pub effect: String,
    #[arg(long, default_value_t = 7)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bonferroni hypothesis count [default: number of tested pairs]
    #[arg(long)]
    pub bonferroni_m: Option<usize>,
    /// Also test effect -> cause
    #[arg(long)]
    pub both_directions: bool,
    #[command(flatten)]
    pub prep: PrepArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Wide series CSV
    #[arg(long)]
    pub series: PathBuf,
    /// Columns to model; the last one is the target in bivariate mode
    #[arg(long, value_delimiter = ',', required = true)]
    pub columns: Vec<String>,
    /// `auto` or a fixed lag order
    #[arg(long, default_value = "auto")]
    pub lag: LagChoice,
    /// Largest order tried by `--lag auto`
    #[arg(long, default_value_t = 7)]
    pub max_lag: usize,
    /// Fit one VAR over all columns instead of one per factor and target
    #[arg(long)]
    pub joint: bool,
    #[command(flatten)]
    pub prep: PrepArgs,
}

#[derive(Clone, Debug, Args)]
pub struct VarArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct IrfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    /// Bootstrap replications (at least 100)
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Bands cover 1 - alpha
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Cholesky-orthogonalised shocks in column order
    #[arg(long)]
    pub orthogonalized: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a small-multiples plot
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub posts: PathBuf,
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
    /// Directory receiving eval.csv, engagement.csv, series.csv,
    /// granger.csv, irf.csv and irf.svg
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    pub conf_threshold: f64,
    #[arg(long, default_value = "boxes", value_parser = parse_unit)]
    pub unit: CountUnit,
    #[arg(long, default_value_t = 7)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub bonferroni_m: Option<usize>,
    /// Classes whose shares enter the impulse responses
    /// [default: the three most frequent]
    #[arg(long, value_delimiter = ',')]
    pub factors: Vec<String>,
    #[arg(long, default_value = "auto")]
    pub lag: LagChoice,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[command(flatten)]
    pub prep: PrepArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SimgenArgs {
    /// Target directory (created if missing)
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON VAR spec (k, p, coefficients, n, seed); writes series.csv
    /// instead of the input-file bundle
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Score detections against annotations
    Eval(EvalArgs),
    /// Retweet and like summaries per detected class
    Engagement(EngagementArgs),
    /// Daily counts, shares, attacks and fatalities as a wide CSV
    Series(SeriesArgs),
    /// Per-lag Granger F tests with Bonferroni flags
    Granger(GrangerArgs),
    /// VAR coefficient tables
    Var(VarArgs),
    /// Impulse responses with bootstrap bands
    Irf(IrfArgs),
    /// Run the whole chain into one directory
    Report(ReportArgs),
    /// Write synthetic fixture files
    Simgen(SimgenArgs),
}

/// Structured diagnostics on the error stream.
pub struct Diagnostics<'a> {
    stream: &'a mut dyn Write,
    quiet: bool,
}

impl<'a> Diagnostics<'a> {
    pub fn new(stream: &'a mut dyn Write, quiet: bool) -> Self {
        Diagnostics { stream, quiet }
    }

    fn emit(&mut self, level: &str, code: &str, message: &str) {
        let flat = message.replace(['\n', '\t'], " ");
        let _ = writeln!(self.stream, "{level}\t{code}\t{}", flat.trim());
    }

    pub fn info(&mut self, code: &str, message: impl AsRef<str>) {
        if !self.quiet {
            self.emit("INFO", code, message.as_ref());
        }
    }

    pub fn warn(&mut self, code: &str, message: impl AsRef<str>) {
        if !self.quiet {
            self.emit("WARN", code, message.as_ref());
        }
    }

    pub fn error(&mut self, code: &str, message: impl AsRef<str>) {
        self.emit("ERROR", code, message.as_ref());
    }
}

/// Exit status and diagnostic code for a library error.
pub fn classify(err: &Error) -> (i32, &'static str) {
    match err {
        Error::Input { .. } => (EXIT_VALIDATION, "input"),
        Error::InvalidArgument(_) => (EXIT_VALIDATION, "argument"),
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            (EXIT_NO_INPUT, "missing-file")
        }
        Error::Io { .. } => (EXIT_IO, "io"),
        Error::RankDeficient { .. } => (EXIT_NUMERICAL, "rank-deficient"),
        Error::NonConvergence { .. } => (EXIT_NUMERICAL, "non-convergence"),
        Error::InsufficientData(_) => (EXIT_NUMERICAL, "insufficient-data"),
        Error::Numerical(_) => (EXIT_NUMERICAL, "numerical"),
    }
}

/// Execute a parsed configuration, returning the exit status.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut diag = Diagnostics::new(stderr, config.global.quiet);
    let outcome =
        commands::execute(config, &mut diag).and_then(|artifacts| artifacts.commit(stdout));
    match outcome {
        Ok(paths) => {
            for p in paths {
                diag.info("written", p.display().to_string());
            }
            EXIT_OK
        }
        Err(e) => {
            let (code, tag) = classify(&e);
            diag.error(tag, e.to_string());
            code
        }
    }
}

/// Parse `args` (including the program name) and run.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("usage error");
                    let mut diag = Diagnostics::new(stderr, false);
                    diag.error("usage", first.trim_start_matches("error: "));
                    EXIT_USAGE
                }
            }
        }
    }
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
