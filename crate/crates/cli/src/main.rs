//! `vpr`: file-based front end for the place recognition pipeline.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or format errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "vpr", version, about = "Visual place recognition by confusion-matrix matching")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grayscale, resize to 256x256 and contrast-stretch an image or a directory of images (PGM output).
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        /// Output file, or directory when the input is a directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Build block-averaged pixel descriptors for every image in a directory.
    Describe {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Descriptor side length; vectors have side^2 values.
        #[arg(long, default_value_t = 32)]
        side: usize,
        /// Inputs are already preprocessed single-channel images.
        #[arg(long)]
        no_preprocess: bool,
    },
    /// Compute the training-by-testing confusion matrix.
    Match {
        /// Training features (binary feature file, or .csv).
        #[arg(long)]
        train: PathBuf,
        /// Testing features (binary feature file, or .csv).
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// l2, sad or sad-offset.
        #[arg(long, default_value = "l2")]
        metric: String,
        /// Horizontal search radius for sad-offset, in descriptor columns.
        #[arg(long, default_value_t = vpr_core::matching::DEFAULT_MAX_OFFSET)]
        max_offset: usize,
    },
    /// Apply the spatial and sequential filters to a confusion matrix.
    Filter {
        #[arg(long)]
        conf: PathBuf,
        /// Final matches CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Score a final-matches CSV against ground truth.
    Eval {
        #[arg(long = "final")]
        final_matches: PathBuf,
        #[command(flatten)]
        truth: TruthArgs,
        /// Filter parameters echoed into the report; they should match the `filter` run.
        #[command(flatten)]
        filter: FilterArgs,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the slope tolerance phi into a precision-recall curve.
    Sweep {
        #[arg(long)]
        conf: PathBuf,
        #[command(flatten)]
        truth: TruthArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = 0.0)]
        phi_min: f64,
        #[arg(long, default_value_t = 0.8)]
        phi_max: f64,
        #[arg(long, default_value_t = 81)]
        phi_steps: usize,
        /// Explicit ascending phi list, overriding the range.
        #[arg(long, value_delimiter = ',')]
        phi_values: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a confusion matrix as a PGM image; good matches are bright.
    Render {
        #[arg(long)]
        conf: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic pair of traverses with exact ground truth.
    Synth {
        #[arg(long, default_value_t = 200)]
        frames: usize,
        /// Training frames advanced per testing frame.
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        basis: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Receives train.bin, test.bin and gt.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Time matching one query against a block of references.
    Bench {
        #[arg(long, default_value_t = 64899)]
        dim: usize,
        #[arg(long, default_value_t = 4789)]
        refs: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// single, multi or both.
        #[arg(long, default_value = "both")]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
struct FilterArgs {
    /// Largest allowed jump between consecutive best matches, in frames.
    #[arg(long, default_value_t = vpr_core::filters::DEFAULT_EPSILON)]
    epsilon: usize,
    /// Sequence length; fits use window + 1 frames.
    #[arg(long, default_value_t = vpr_core::filters::DEFAULT_WINDOW)]
    window: usize,
    /// Expected slope angle of the match line, in radians.
    #[arg(long, default_value_t = vpr_core::filters::DEFAULT_SIGMA)]
    sigma: f64,
    /// Tolerance on the slope angle, in radians.
    #[arg(long, default_value_t = vpr_core::filters::DEFAULT_PHI)]
    phi: f64,
}

#[derive(Debug, Clone, Args)]
struct TruthArgs {
    /// Frame correspondence CSV (test_index,train_index).
    #[arg(long, conflicts_with_all = ["train_geo", "test_geo"])]
    gt: Option<PathBuf>,
    /// Frame tolerance for --gt.
    #[arg(long, default_value_t = vpr_core::eval::FRAME_TOLERANCE)]
    tolerance: f64,
    /// Training geotags CSV (frame_index,lat_deg,lon_deg).
    #[arg(long, requires = "test_geo")]
    train_geo: Option<PathBuf>,
    #[arg(long, requires = "train_geo")]
    test_geo: Option<PathBuf>,
    /// Metric tolerance for geotags.
    #[arg(long, default_value_t = vpr_core::eval::GEO_TOLERANCE_M)]
    tolerance_m: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
