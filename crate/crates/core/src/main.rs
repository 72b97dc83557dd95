use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gdvt::Error;

mod cli;

#[derive(Parser)]
#[command(version, about = "Gibbs Delaunay-Voronoi tessellations: simulation, estimation and residual diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the birth-death-move sampler.
    Simulate(SimulateArgs),
    /// Fit hardcore bounds, theta and z by maximum pseudo-likelihood.
    Estimate(EstimateArgs),
    /// Raw residuals on a square grid.
    Residuals(ResidualArgs),
    /// Residual QQ plot against datasets simulated from the fit.
    Qqplot(QqArgs),
    /// Run a named preset and write its CSV and SVG outputs.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Experiment configuration (TOML).
    #[arg(long, visible_alias = "model")]
    pub config: PathBuf,
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub monitor_every: Option<u64>,
    /// Final configuration; written to stdout when absent.
    #[arg(long)]
    pub out_points: Option<PathBuf>,
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Independent chains; output files get a `_NNN` suffix.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Seed of the first replication, the others following consecutively.
    #[arg(long)]
    pub seed_base: Option<u64>,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Points CSV, or a directory of them for a batch summary.
    #[arg(long)]
    pub points: PathBuf,
    /// Configuration naming the model to fit.
    #[arg(long, visible_alias = "config")]
    pub model: PathBuf,
    #[arg(long)]
    pub z_known: Option<f64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub erosion: Option<f64>,
    /// Fitted shape bounds above this are reported as effectively inactive.
    #[arg(long, default_value_t = 50.0)]
    pub inactive_shape_above: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ResidualInput {
    #[arg(long)]
    pub points: PathBuf,
    /// Fit result written by `estimate`.
    #[arg(long)]
    pub fit: PathBuf,
    /// Configuration whose `[residuals]` section supplies the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid_side: Option<f64>,
    #[arg(long)]
    pub mc_per_square: Option<usize>,
    /// raw, inverse or pearson.
    #[arg(long)]
    pub test_function: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub input: ResidualInput,
    #[arg(long)]
    pub out_grid: Option<PathBuf>,
    /// Heatmap of the residual grid.
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Kernel-smoothed residual field as `i,j,value`.
    #[arg(long)]
    pub out_smoothed: Option<PathBuf>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

#[derive(Args)]
pub struct QqArgs {
    #[command(flatten)]
    pub input: ResidualInput,
    #[arg(long)]
    pub n_boot: Option<usize>,
    #[arg(long)]
    pub iters_per_boot: Option<u64>,
    #[arg(long)]
    pub out_qq: Option<PathBuf>,
    /// QQ plot with the simulation band.
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// fig1, fig2, fig3, fig4, fig5, fig6, fig7, fig8, fig9, fig10, fig11, fig12, fig13 or fig14.
    pub preset: String,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replications of the estimation presets.
    #[arg(long, default_value_t = 20)]
    pub replications: usize,
    /// Simulated datasets of the residual presets.
    #[arg(long, default_value_t = 100)]
    pub n_boot: usize,
    /// Overrides every chain length of the preset.
    #[arg(long)]
    pub iters: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidInput(_) | Error::NoAdmissibleStart { .. } => 2,
        Error::Degenerate { .. } | Error::TorusTooSparse | Error::DuplicatePoint { .. } => 3,
        Error::Inestimable(_) | Error::NoRoot { .. } | Error::TooFewPoints { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cli::simulate(&a),
        Command::Estimate(a) => cli::estimate(&a),
        Command::Residuals(a) => cli::residuals(&a),
        Command::Qqplot(a) => cli::qqplot(&a),
        Command::Reproduce(a) => cli::reproduce(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
