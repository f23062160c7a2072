//! `bifurc`: bifurcation diagrams, envelope curves, their intersections, and
//! periodicity certification from the command line.
//!
//! Exit codes: 0 success, 1 certification failure, 2 usage or invalid input,
//! 3 I/O failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` also rejects NaN

mod commands;
mod config;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "bifurc",
    version,
    about = "Bifurcation diagrams and envelope curves of one-dimensional maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a density raster and write it as an image, counts file and/or CSV.
    #[command(args_override_self = true)]
    Diagram(DiagramArgs),
    /// Sample envelope curves to CSV and/or overlay them on a counts file.
    #[command(args_override_self = true)]
    Envelope(EnvelopeArgs),
    /// Locate intersections between envelope curves and write a record CSV.
    #[command(args_override_self = true)]
    Intersect(IntersectArgs),
    /// Certify the records of a record CSV as periodic points.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
}

impl Command {
    fn shared(&self) -> &Shared {
        match self {
            Command::Diagram(a) => &a.shared,
            Command::Envelope(a) => &a.shared,
            Command::Intersect(a) => &a.shared,
            Command::Verify(a) => &a.shared,
        }
    }
}

/// Options every subcommand accepts; a config file may set any of them.
#[derive(Args, Debug, Clone)]
pub struct Shared {
    /// Map family: sine, logistic or rational-odd.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub rmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rmax: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xmax: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub cols: usize,
    #[arg(long, default_value_t = 1200)]
    pub rows: usize,
    #[arg(long, default_value_t = 1000)]
    pub transient: usize,
    #[arg(long, default_value_t = 500)]
    pub keep: usize,
    /// Curve orders, e.g. `1..4` or `0,2,5` (ranges inclusive).
    #[arg(long, default_value = "1..4")]
    pub orders: String,
    /// Largest order accepted; high orders are numerically meaningless in chaotic ranges.
    #[arg(long, default_value_t = 8)]
    pub max_order: usize,
    /// Curve branches: plus, minus or both.
    #[arg(long, default_value = "both")]
    pub branch: String,
    /// Parameter-axis tolerance for intersection refinement.
    #[arg(long, default_value_t = bifurc::intersect::DEFAULT_REFINE_TOL)]
    pub tol: f64,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Primary output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Tone {
    Log,
    Linear,
}

#[derive(Args, Debug, Clone)]
pub struct ToneArgs {
    #[arg(long, value_enum, default_value = "log")]
    pub tone: Tone,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Light ink on black.
    #[arg(long)]
    pub invert: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    /// `+r` and `-r` (the critical value and its mirror).
    Pair,
    /// The critical value only.
    Single,
    /// `--init-count` seeded uniform starts per column.
    Random,
}

#[derive(Args, Debug)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[command(flatten)]
    pub tone: ToneArgs,
    /// Also write the binary counts file.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Also write `r,x,count` for occupied cells.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    /// Explicit initial conditions, comma separated; overrides `--init`.
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub init_count: usize,
    /// Seed for `--init random`; recorded in the CSV header.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub shared: Shared,
    #[command(flatten)]
    pub tone: ToneArgs,
    /// Counts file to draw the curves over; the image goes to `--out`.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Directory for one `c<n>_<branch>.csv` per curve.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    /// Samples per curve.
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct IntersectArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Branch pairs such as `++,+-` or `plus:minus`; overrides `--branch`.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Scan samples per unit of r.
    #[arg(long)]
    pub grid_density: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Record CSV to certify.
    #[arg(long)]
    pub input: PathBuf,
    /// Residual tolerance for the periodicity certificate.
    #[arg(long, default_value_t = bifurc::intersect::DEFAULT_CERT_TOL)]
    pub cert_tol: f64,
}

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Certification(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Certification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Certification(m) | Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<bifurc::Error> for Failure {
    fn from(e: bifurc::Error) -> Self {
        match &e {
            bifurc::Error::Io(_) => Failure::Io(e.to_string()),
            bifurc::Error::Csv(c) if c.is_io_error() => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Long option names of a subcommand, split into value options and switches.
fn option_names(sub: &clap::Command) -> (Vec<String>, Vec<String>) {
    let (mut known, mut flags) = (Vec::new(), Vec::new());
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if long == "help" {
            continue;
        }
        known.push(long.to_string());
        if !arg.get_action().takes_values() {
            flags.push(long.to_string());
        }
    }
    (known, flags)
}

/// Re-parses `argv` with the config file's settings inserted ahead of the
/// command-line options, so the latter win.
fn with_config(argv: &[String], path: &PathBuf) -> Result<Cli, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", path.display())))?;
    let bad = |m: String| Failure::Usage(format!("config {}: {m}", path.display()));
    let settings = config::parse_config(&text).map_err(bad)?;

    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(&argv[1])
        .expect("subcommand was parsed once already");
    let (known, flags) = option_names(sub);
    // keys meant for another subcommand are ignored, so one file can serve all
    let everywhere: BTreeSet<String> = cmd
        .get_subcommands()
        .flat_map(|s| option_names(s).0)
        .collect();
    let relevant: Vec<_> = settings
        .into_iter()
        .filter(|s| known.contains(&s.key) || !everywhere.contains(&s.key))
        .collect();
    let file_args = config::settings_to_args(&relevant, &known, &flags).map_err(bad)?;

    let mut full = vec![argv[0].clone(), argv[1].clone()];
    full.extend(file_args);
    full.extend(argv[2..].iter().cloned());
    Cli::try_parse_from(&full).map_err(|e| bad(e.to_string().trim_end().to_string()))
}

fn run(argv: Vec<String>) -> Result<(), Failure> {
    let mut cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Err(Failure::Usage(String::new()))
            } else {
                Ok(())
            };
        }
    };
    if let Some(path) = cli.command.shared().config.clone() {
        cli = with_config(&argv, &path)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.command.shared().threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Diagram(a) => commands::diagram(a),
        Command::Envelope(a) => commands::envelope(a),
        Command::Intersect(a) => commands::intersect(a),
        Command::Verify(a) => commands::verify(a),
    })
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.to_string();
            if !msg.is_empty() {
                eprintln!("bifurc: {msg}");
            }
            ExitCode::from(f.code())
        }
    }
}
