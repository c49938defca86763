//! `paintlidar`: simulate panel scans, run sweeps, build reports and drive the
//! perception-error-model cycle. Exit codes: 0 success, 1 usage, 2 data error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "paintlidar", version, about = "LiDAR paint-panel simulator and perception error model toolkit")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan the scenario once and write the point cloud plus a per-panel summary.
    Simulate(SimulateArgs),
    /// Run the experiment grid and write per-run and aggregated results.
    Sweep(SweepArgs),
    /// Group comparisons, trend checks and plot data from a results file.
    Report(ReportArgs),
    /// Fit an error model from error records.
    PemCalibrate(CalibrateArgs),
    /// Inject errors onto ground-truth objects with an error model.
    PemApply(ApplyArgs),
    /// Compare an error model with held-out error records.
    PemValidate(ValidateArgs),
    /// Print the paint table (built-in or from a file) and its ordering warnings.
    PaintTable(PaintTableArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario file (the built-in default scenario when omitted).
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Overrides the scenario seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = CloudFormat::Text)]
    format: CloudFormat,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Comma-separated paint codes; overrides the scenario's sweep list.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    paints: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Results CSV (defaults to OUT/results/results.csv).
    #[arg(long, value_name = "PATH")]
    results: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Paint table file used to classify paints (built-in when omitted).
    #[arg(long, value_name = "PATH")]
    table: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Error-record CSV (defaults to OUT/results/error_records.csv).
    #[arg(long, value_name = "PATH")]
    records: Option<PathBuf>,
    /// Scenario whose [pem] section sets the binning.
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Seed of the run that produced the records, stored as metadata.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    /// Error model (defaults to OUT/models/error_model.toml).
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Ground-truth object CSV.
    #[arg(long, value_name = "PATH")]
    gt: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "U64", default_value_t = 0)]
    seed: u64,
    /// Serve objects outside every populated bin from the nearest bin instead of failing.
    #[arg(long)]
    allow_fallback: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Held-out error-record CSV.
    #[arg(long, value_name = "PATH")]
    records: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PaintTableArgs {
    #[arg(long, value_name = "PATH")]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CloudFormat {
    Text,
    Binary,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
