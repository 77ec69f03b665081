//! Command-line front end for the simplex-mapping classifier.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use casimac::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casimac", version, about = "Calibrated simplex-mapping classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a labeled CSV file.
    Train(TrainArgs),
    /// Predict labels and optionally class probabilities.
    Predict(PredictArgs),
    /// Score a model on a labeled CSV file.
    Evaluate(EvaluateArgs),
    /// Calibration curve of a binary model.
    Calibrate(CalibrateArgs),
    /// Cross-validated grid search.
    Tune(TuneArgs),
    /// Write the four-quadrant synthetic dataset.
    Synth(SynthArgs),
    /// Latent, compressed and barycentric coordinates for plotting.
    Viz(VizArgs),
}

#[derive(Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_col: String,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Mixing weight: alpha = gamma, beta = 1 - gamma.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub gamma: Option<f64>,
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub k_alpha: usize,
    #[arg(long, default_value_t = 1)]
    pub k_beta: usize,
    /// euclidean, taxicab or plugin:NAME
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// Matérn smoothness: 0.5, 1.5 or 2.5.
    #[arg(long, default_value_t = 2.5)]
    pub nu: f64,
    /// none, standardize or minmax
    #[arg(long, default_value = "standardize")]
    pub preprocessing: String,
    /// Optimizer restarts beyond the initial hyperparameters.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Pin the noise variance near zero so the fit interpolates.
    #[arg(long)]
    pub noise_free: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct McArgs {
    #[arg(long, default_value_t = casimac::classifier::DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Column to ignore if present, e.g. known labels.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Also write one probability column per class.
    #[arg(long)]
    pub proba: bool,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Top-k accuracies to report.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub top_k: Vec<usize>,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Positive class; defaults to the model's first label.
    #[arg(long)]
    pub positive: Option<String>,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k_alphas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k_betas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "euclidean")]
    pub metrics: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2.5")]
    pub nus: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value = "standardize")]
    pub preprocessing: String,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct VizArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Points to map; required unless --use-transform.
    #[arg(long, required_unless_present = "use_transform")]
    pub data: Option<PathBuf>,
    /// Column holding true labels, if present.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Emit the training points, compressing their transformed images
    /// instead of the predicted means.
    #[arg(long, conflicts_with = "data")]
    pub use_transform: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Tune(a) => commands::tune(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Viz(a) => commands::viz(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
