use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use overbound::simkit::{Method, Mode};

mod commands;
mod io;

#[derive(Parser)]
#[command(name = "overbound", version, about = "Fit CDF overbounds to range errors and compute vertical protection levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a bound to a column of error samples.
    Fit(FitArgs),
    /// Tabulate a bound or distribution for plotting.
    Curves(CurvesArgs),
    /// Per-epoch vertical protection levels for one or more bounds.
    Vpl(VplArgs),
    /// Run a simulated positioning experiment from a config file.
    Experiment(ExperimentArgs),
    /// Dump the NavDEN envelope table.
    NavdenTable(NavdenTableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Su,
    Nsu,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Su => Mode::Su,
            ModeArg::Nsu => Mode::Nsu,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    CauchyGaussian,
    SingleGaussian,
    TwoStep,
    Navden,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::CauchyGaussian => Method::CauchyGaussian,
            MethodArg::SingleGaussian => Method::SingleGaussian,
            MethodArg::TwoStep => Method::TwoStep,
            MethodArg::Navden => Method::Navden,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value = "error_m")]
    column: String,
    #[arg(long, value_enum, default_value = "su")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "cauchy-gaussian")]
    method: MethodArg,
    /// NavDEN shape parameters (TOML or JSON).
    #[arg(long)]
    navden_params: Option<PathBuf>,
    /// Accepted single-CDF bias in standard errors of the mean.
    #[arg(long)]
    bias_tol_se: Option<f64>,
    /// Seed for the paired-fit optimizer.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluation budget per paired family.
    #[arg(long)]
    budget: Option<usize>,
    /// Directory for optimizer trace CSVs (paired fits only).
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    /// Bound record or distribution (JSON).
    #[arg(long)]
    bound: PathBuf,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SkyArgs {
    /// Geometry CSV (epoch_id, sat_id, azimuth_deg, elevation_deg).
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Synthetic sky epochs when no geometry file is given.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    satellites: Option<usize>,
}

#[derive(Args)]
struct VplArgs {
    /// Bound record or distribution files; repeat for several.
    #[arg(long = "bound", required = true)]
    bounds: Vec<PathBuf>,
    #[command(flatten)]
    sky: SkyArgs,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 1e-9)]
    p_hmi: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    sky: SkyArgs,
}

#[derive(Args)]
struct NavdenTableArgs {
    /// Parameter file; the urban reference values when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Curves(a) => commands::curves(a),
        Command::Vpl(a) => commands::vpl(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::NavdenTable(a) => commands::navden_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::from(match e.kind() {
                "infeasible" => 3,
                "numeric" => 4,
                _ => 2,
            })
        }
    }
}
