use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use sedbox::decode::UnmatchedPolicy;
use sedbox::eval::MatchingMode;
use sedbox::stats::TDenominator;

/// Sound-event box decoding, fusion, evaluation, synthesis and overlap
/// statistics.
#[derive(Debug, Parser)]
#[command(name = "sedbox", version)]
pub struct Cli {
    /// Flat `key=value` file of option defaults; flags given on the command
    /// line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame predictions to a scored selection table, one per input file.
    Decode(DecodeArgs),
    /// Fuse forward and backward predictions into one selection table.
    Fuse(FuseArgs),
    /// Score predicted tables against ground truth.
    Eval(EvalArgs),
    /// Generate overlap-controlled synthetic recordings.
    Synth(SynthArgs),
    /// Expected versus observed overlap counts and the paired t statistic.
    Stats(StatsArgs),
    /// Training losses of a prediction file and a finite-difference check of
    /// their gradients.
    Losscheck(LossArgs),
}

fn choice<T>(values: &'static [&'static str]) -> impl TypedValueParser<Value = T>
where
    T: std::str::FromStr + Clone + Send + Sync + 'static,
    T::Err: std::fmt::Debug,
{
    PossibleValuesParser::new(values).map(|s| s.parse::<T>().expect("listed value parses"))
}

#[derive(Debug, Clone, Args)]
pub struct DecodeOpts {
    /// Minimum detection probability for a peak.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Soft-NMS Gaussian width.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Decayed boxes scoring below this are dropped.
    #[arg(long, default_value_t = 0.005)]
    pub score_floor: f64,
    /// Skip soft-NMS.
    #[arg(long)]
    pub no_nms: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Prediction CSV files or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory receiving one `<name>.txt` table per input.
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub opts: DecodeOpts,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Forward prediction file, or a directory paired with `--backward` by
    /// file name.
    #[arg(long)]
    pub forward: PathBuf,
    /// Backward prediction file or directory.
    #[arg(long)]
    pub backward: PathBuf,
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Minimum IoU for a forward and a backward box to be fused.
    #[arg(long, default_value_t = 0.5)]
    pub fusion_iou: f64,
    #[arg(long, default_value = "keep-forward", value_parser = choice::<UnmatchedPolicy>(&["keep-forward", "keep-both", "drop"]))]
    pub unmatched: UnmatchedPolicy,
    #[command(flatten)]
    pub opts: DecodeOpts,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted selection table or directory of them (must carry scores).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth selection table or directory, paired by file name.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report CSV path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Also write precision-recall curves here.
    #[arg(long, value_name = "FILE")]
    pub pr_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.8])]
    pub iou: Vec<f64>,
    /// Recall levels for interpolated AP.
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    #[arg(long, default_value = "greedy", value_parser = choice::<MatchingMode>(&["greedy", "maxcard"]))]
    pub matching: MatchingMode,
    /// Class names, one per line. Defaults to the annotations found in the
    /// truth tables, then the prediction tables.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Target overlap-to-call ratio.
    #[arg(long = "R", value_name = "R")]
    pub target_ratio: f64,
    /// Calls per recording.
    #[arg(long, conflicts_with = "n_list")]
    pub n: Option<usize>,
    /// Comma-separated calls per recording; sets the number of recordings.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Number of recordings when `--n` is used.
    #[arg(long, default_value_t = 1)]
    pub recordings: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Directory with `calls/*.wav` and `backgrounds/*.wav`; enables audio
    /// output. Without it call durations are drawn uniformly.
    #[arg(long, value_name = "DIR")]
    pub audio_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub clip_duration: f64,
    #[arg(long, default_value_t = 0.05)]
    pub min_duration: f64,
    #[arg(long, default_value_t = 0.17)]
    pub max_duration: f64,
    #[arg(long, default_value_t = 0.005)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub max_retries: usize,
    #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
    pub snr_low: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr_high: f64,
    /// Annotation written for every call.
    #[arg(long, default_value = "zf")]
    pub class: String,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// CSV with columns file, n, d (density or `;`-separated durations), B,
    /// observed.
    pub input: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "paper", value_parser = choice::<TDenominator>(&["paper", "standard"]))]
    pub t_denominator: TDenominator,
    /// Window length in seconds for duration lists.
    #[arg(long, default_value_t = 60.0)]
    pub window: f64,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Ground-truth selection table.
    #[arg(long)]
    pub truth: PathBuf,
    /// Prediction CSV.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    /// Target width divisor: variance is duration² / s, in frames.
    #[arg(long, default_value_t = 6.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub abs_tol: f64,
}
