use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ParamFlags;

/// Guidance maps, long-video windows, dataset statistics and evaluation
/// metrics for pose-driven multi-character animation.
///
/// Every parameter flag can also be set in a TOML or JSON file passed with
/// `--config`; a flag on the command line wins over the file, which wins over
/// the built-in default. Exit codes: 0 success, 1 usage, 2 I/O, 3 invalid data.
#[derive(Debug, Parser)]
#[command(name = "condguide", version)]
pub struct Cli {
    /// TOML (or .json) file with parameter defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for frame-parallel work [config: jobs] [default: CONDGUIDE_JOBS, else all cores]
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Run-report path [default: <output dir>/<command>_report.json]
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,

    #[command(flatten)]
    pub params: ParamFlags,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Skeletal dilation masks: one 8-bit PNG per frame and character
    Dilate(DilateArgs),
    /// Background optical-flow guidance maps (CGGM files)
    Flowmap(FlowmapArgs),
    /// Depth-order maps (PFM + PNG preview) with a rank sidecar
    Depthorder(DepthorderArgs),
    /// Render pose maps from keypoints (e.g. the reference image's)
    Refpose(RefposeArgs),
    /// Dataset statistics: background flow, character counts, occlusion
    Analyze(AnalyzeArgs),
    /// Print the overlap-window plan for a long video as JSON
    Windows(WindowsArgs),
    /// L1, PSNR, SSIM and Fréchet distances between frame directories
    Metrics(MetricsArgs),
    /// Generate a long video window by window with an external generator
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct PoseInput {
    /// Pose sequence JSON
    #[arg(long, value_name = "FILE")]
    pub pose: PathBuf,

    /// Clip id used in output names [default: pose file stem]
    #[arg(long, value_name = "ID")]
    pub clip: Option<String>,
}

#[derive(Debug, Args)]
pub struct DilateArgs {
    #[command(flatten)]
    pub input: PoseInput,

    /// Output directory; files are named {clip}_{frame:05}_{character}.png
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowmapArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,

    #[command(flatten)]
    pub input: PoseInput,

    /// Training: directory of PNG frames; flow is estimated between consecutive frames
    #[arg(long, value_name = "DIR", conflicts_with = "flows")]
    pub frames: Option<PathBuf>,

    /// Training: directory of CGFL flow files; file k holds the motion from frame k to k+1
    #[arg(long, value_name = "DIR")]
    pub flows: Option<PathBuf>,

    /// Output directory; files are named {clip}_{frame:05}.cggm
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DepthorderArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,

    #[command(flatten)]
    pub input: PoseInput,

    /// Training: directory with one depth file (.pfm or 16-bit .png) per frame
    #[arg(long, value_name = "DIR")]
    pub depth: Option<PathBuf>,

    /// Inference: rank sidecar JSON holding the reference ranks
    #[arg(long, value_name = "FILE", conflicts_with_all = ["reference_pose", "reference_depth"])]
    pub reference_ranks: Option<PathBuf>,

    /// Inference: pose JSON of the reference image (ranks are computed from it)
    #[arg(long, value_name = "FILE", requires = "reference_depth")]
    pub reference_pose: Option<PathBuf>,

    /// Inference: depth of the reference image (.pfm or 16-bit .png)
    #[arg(long, value_name = "FILE", requires = "reference_pose")]
    pub reference_depth: Option<PathBuf>,

    /// Frame of the reference pose file or sidecar to use
    #[arg(long, value_name = "K", default_value_t = 0)]
    pub reference_frame: usize,

    /// Output directory; maps are {clip}_{frame:05}.pfm/.png, ranks {clip}_ranks.json
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RefposeArgs {
    #[command(flatten)]
    pub input: PoseInput,

    /// Output directory; files are named {clip}_{frame:05}.png
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON list of {"id"?, "clip", "pose"} entries; clip is a directory of PNG frames or CGFL files
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,

    /// Output directory for analysis.csv and histograms.json
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WindowsArgs {
    /// Number of frames in the video
    #[arg(long, value_name = "N")]
    pub total: usize,

    /// Write the plan here instead of standard output
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Directory of ground-truth PNG frames
    #[arg(long, value_name = "DIR")]
    pub real: PathBuf,

    /// Directory of generated PNG frames, paired with --real by sorted name
    #[arg(long = "gen", value_name = "DIR")]
    pub generated: PathBuf,

    /// Image feature files (CGFS) for a Fréchet distance: REAL GEN
    #[arg(long, num_args = 2, value_names = ["REAL", "GEN"])]
    pub features: Option<Vec<PathBuf>>,

    /// Video feature files (CGFS, one vector per 16-frame sample): REAL GEN
    #[arg(long, num_args = 2, value_names = ["REAL", "GEN"])]
    pub video_features: Option<Vec<PathBuf>>,

    /// Write the metric report here instead of standard output
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: PoseInput,

    /// Output directory; blended frames are named {clip}_{frame:05}.png
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Generator program. Per window it gets the pose slice as JSON on stdin
    /// and an empty output directory as its last argument, and must write
    /// exactly one PNG per frame there (sorted by name)
    #[arg(long, value_name = "PROGRAM")]
    pub generator: PathBuf,

    /// Extra arguments passed to the generator before the output directory
    #[arg(last = true, value_name = "ARGS")]
    pub generator_args: Vec<String>,
}
