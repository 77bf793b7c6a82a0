use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use swp_core::detect::PaddingVariant;

#[derive(Debug, Parser)]
#[command(name = "swp", version, about = "Stem detection and xylem wetness classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Build a manifest from a directory of per-video frame folders.
    Ingest(IngestArgs),
    /// Locate the stem in every video and report IoU against ground truth.
    Detect(DetectArgs),
    /// Train the reference classifier on manifest crops.
    Train(TrainArgs),
    /// Train one model per variant of a grid file.
    Grid(GridArgs),
    /// Replay the first-phase selection gate.
    Gate(GateArgs),
    /// Detect, then classify every later frame inside the detected box.
    E2e(E2eArgs),
    /// Summarize per-video Top-1 of an end-to-end report.
    Boxplot(BoxplotArgs),
    /// Serve the annotation API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorChoice {
    H20,
    H30,
    H40,
    Learned,
    Manual,
}

impl DetectorChoice {
    pub fn pad(self) -> Option<PaddingVariant> {
        match self {
            DetectorChoice::H20 => Some(PaddingVariant::H20),
            DetectorChoice::H30 => Some(PaddingVariant::H30),
            DetectorChoice::H40 => Some(PaddingVariant::H40),
            _ => None,
        }
    }
}

/// Inclusive frame range written `A:B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub from: u32,
    pub to: u32,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
        let from: u32 = a.trim().parse().map_err(|_| format!("bad window start {a:?}"))?;
        let to: u32 = b.trim().parse().map_err(|_| format!("bad window end {b:?}"))?;
        if from == 0 || from > to {
            return Err(format!("window {from}:{to} must satisfy 1 <= A <= B"));
        }
        Ok(Window { from, to })
    }
}

fn parse_pad(s: &str) -> Result<PaddingVariant, String> {
    s.parse().map_err(|e: swp_core::Error| e.to_string())
}

fn parse_sizes(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad size {p:?}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three sizes TRAIN,VAL,TEST".to_string())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SyntheticConfig JSON; defaults are used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding one frame folder per video.
    #[arg(long)]
    pub frames: PathBuf,
    /// Previous manifest whose split assignments are kept.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Seed for a fresh 60/20/20 video split when no previous manifest is given.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "h30")]
    pub detector: DetectorChoice,
    /// Overrides the padding implied by the detector.
    #[arg(long, value_parser = parse_pad)]
    pub pad: Option<PaddingVariant>,
    #[arg(long, default_value = "501:700")]
    pub window: Window,
    /// Box regressor checkpoint for the learned detector.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// JSON object of manual boxes keyed by video; ground truth is used when absent.
    #[arg(long)]
    pub boxes: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Class-balanced crop counts for train, val and test.
    #[arg(long, value_parser = parse_sizes, default_value = "900,300,300")]
    pub sizes: [usize; 3],
    /// Padding around the true circle for training crops.
    #[arg(long, value_parser = parse_pad, default_value = "H30")]
    pub pad: PaddingVariant,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// TrainConfig JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train the box regressor used by the learned detector instead of the classifier,
    /// on whole train-split frames (as many as the train size).
    #[arg(long)]
    pub regressor: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// JSON list of TrainConfig records.
    #[arg(long)]
    pub grid: PathBuf,
    /// Replaces every variant's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// JSON list of gate rows; the bundled first-phase table when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated model names selected regardless of the criteria.
    #[arg(long, value_delimiter = ',')]
    pub exceptions: Option<Vec<String>>,
    #[arg(long, default_value_t = 70.0)]
    pub min_top1: f64,
    #[arg(long, default_value_t = 100.0)]
    pub max_epoch_seconds: f64,
    #[arg(long, default_value_t = 1)]
    pub min_best_epoch: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct E2eArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "h30")]
    pub detector: DetectorChoice,
    #[arg(long, value_parser = parse_pad)]
    pub pad: Option<PaddingVariant>,
    #[arg(long, default_value = "501:700")]
    pub window: Window,
    #[arg(long, default_value_t = 701)]
    pub classify_from: u32,
    #[arg(long)]
    pub classify_to: Option<u32>,
    /// Classifier checkpoint.
    #[arg(long, conflicts_with = "oracle")]
    pub checkpoint: Option<PathBuf>,
    /// Classify with the reference labels themselves.
    #[arg(long)]
    pub oracle: bool,
    /// Box regressor checkpoint for the learned detector.
    #[arg(long)]
    pub detector_checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub boxes: Option<PathBuf>,
    /// Annotation directory; majority labels of three annotators replace ground truth.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Restrict to videos of one split.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoxplotArgs {
    /// e2e.json written by the e2e subcommand.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}
