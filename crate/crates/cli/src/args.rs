use std::net::IpAddr;
use std::path::PathBuf;

use ccid_core::fusion::{FusionMethod, FusionParams};
use ccid_core::models::{DenoiserSpec, DenoiserTraining};
use ccid_core::{FilterKind, NoiseKind, ReliableFilterSpec, TrainConfig, Wavelet};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ccid", version, about = "Controllable confidence-based image denoising")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run both denoisers and write reliable, dnn, residual, confidence and fused images.
    Denoise(DenoiseArgs),
    /// Write only the fused image.
    Fuse(FuseArgs),
    /// Score fusion over a grid of weights against a clean image (CSV).
    Sweep(SweepArgs),
    /// Build (or refresh) the cached confidence training set.
    GenDataset(GenDatasetArgs),
    /// Train the residual denoiser on a corpus of clean images.
    TrainDenoiser(TrainDenoiserArgs),
    /// Train the confidence network on the cached dataset.
    TrainConfidence(TrainConfidenceArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write a corpus of synthetic piecewise-smooth scenes.
    SynthCorpus(SynthCorpusArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    #[default]
    Denoise,
    SuperResolution,
}

#[derive(Clone, Debug, Args)]
pub struct FusionArgs {
    /// Fusion method: dct, dwt or dwt_corr.
    #[arg(long, default_value = "dct")]
    pub method: FusionMethod,
    /// Global fusion weight, 0 = reliable, 1 = learned.
    #[arg(long, short = 'w', default_value_t = 0.5)]
    pub weight: f64,
    /// Modulate the weight per region with the predicted confidence.
    #[arg(long)]
    pub guided: bool,
    /// Confidence threshold of guided fusion.
    #[arg(long, default_value_t = FusionParams::default().threshold)]
    pub threshold: f64,
    /// Variance scale of the DCT mask.
    #[arg(long, default_value_t = FusionParams::default().mask_scale)]
    pub mask_scale: f64,
    /// Variance offset of the DCT mask.
    #[arg(long, default_value_t = FusionParams::default().mask_eps)]
    pub mask_eps: f64,
    /// Decomposition depth of whole-image DWT fusion.
    #[arg(long, default_value_t = FusionParams::default().levels)]
    pub levels: usize,
    #[arg(long, default_value = "haar")]
    pub wavelet: Wavelet,
}

impl FusionArgs {
    pub fn params(&self) -> FusionParams {
        FusionParams {
            method: self.method,
            weight: self.weight,
            guided: self.guided,
            threshold: self.threshold,
            mask_scale: self.mask_scale,
            mask_eps: self.mask_eps,
            levels: self.levels,
            wavelet: self.wavelet,
            ..FusionParams::default()
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct FilterArgs {
    /// Reliable filter: gaussian, bilateral, nlm or bicubic_upscale.
    #[arg(long, default_value = "gaussian")]
    pub filter: FilterKind,
    #[arg(long, default_value_t = ReliableFilterSpec::default().gaussian_sigma)]
    pub filter_sigma: f64,
    #[arg(long, default_value_t = ReliableFilterSpec::default().bilateral_sigma_space)]
    pub bilateral_space: f64,
    #[arg(long, default_value_t = ReliableFilterSpec::default().bilateral_sigma_range)]
    pub bilateral_range: f64,
    #[arg(long, default_value_t = ReliableFilterSpec::default().nlm_patch)]
    pub nlm_patch: usize,
    #[arg(long, default_value_t = ReliableFilterSpec::default().nlm_window)]
    pub nlm_window: usize,
    #[arg(long, default_value_t = ReliableFilterSpec::default().nlm_h)]
    pub nlm_h: f64,
    /// Upscaling factor in super-resolution mode.
    #[arg(long, default_value_t = ReliableFilterSpec::default().scale)]
    pub scale: usize,
}

impl FilterArgs {
    pub fn spec(&self, mode: Mode) -> ReliableFilterSpec {
        let kind = match mode {
            Mode::SuperResolution => FilterKind::BicubicUpscale,
            Mode::Denoise => self.filter,
        };
        ReliableFilterSpec {
            kind,
            gaussian_sigma: self.filter_sigma,
            bilateral_sigma_space: self.bilateral_space,
            bilateral_sigma_range: self.bilateral_range,
            nlm_patch: self.nlm_patch,
            nlm_window: self.nlm_window,
            nlm_h: self.nlm_h,
            scale: self.scale,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Denoiser parameter file.
    #[arg(long, default_value = "models/denoiser.params")]
    pub denoiser: PathBuf,
    /// Confidence network parameter file.
    #[arg(long, default_value = "models/confidence.params")]
    pub confidence: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Directory receiving the output images.
    #[arg(long, short = 'o', default_value = "out")]
    pub out_dir: PathBuf,
}

/// An explicit reliable/learned pair, used instead of running the models.
#[derive(Clone, Debug, Args)]
#[group(requires_all = ["reliable", "hallucinatory"], multiple = true)]
pub struct PairArgs {
    /// Precomputed reliable image.
    #[arg(long, conflicts_with = "input")]
    pub reliable: Option<PathBuf>,
    /// Precomputed learned (hallucinatory) image.
    #[arg(long, conflicts_with = "input")]
    pub hallucinatory: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Noisy image, or the low-resolution image in super-resolution mode.
    /// With --noise-sigma it is treated as clean and noise is added.
    #[arg(long, short = 'i', required_unless_present = "reliable")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Denoise)]
    pub mode: Mode,
    /// Externally produced high-resolution image (super-resolution mode).
    #[arg(long, required_if_eq("mode", "super-resolution"))]
    pub hr: Option<PathBuf>,
    /// Add synthetic noise of this level (8-bit scale) to the input.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    pub noise_kind: NoiseKind,
    /// Seed of the synthetic noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub models: ModelArgs,
}

#[derive(Clone, Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[arg(long, short = 'o', default_value = "fused.png")]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Ground truth. Defaults to the input when --noise-sigma is given.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Explicit comma-separated weights.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Number of uniform steps from 0 to 1 when no grid is given.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// CSV destination; standard output when omitted.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Also write the fused image of every grid weight here.
    #[arg(long)]
    pub fused_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct CorpusArgs {
    /// Directory of clean grayscale PNG/PGM images.
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Denoiser whose outputs the confidence network learns to judge.
    #[arg(long, default_value = "models/denoiser.params")]
    pub denoiser: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, default_value_t = 40)]
    pub patch: usize,
    #[arg(long, env = "CCID_CACHE_DIR", default_value = ".ccid-cache")]
    pub cache_dir: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct GenDatasetArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().weight_decay)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-epoch loss history; defaults to the output path with a .csv extension.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct TrainDenoiserArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value_t = DenoiserSpec::default().depth)]
    pub depth: usize,
    #[arg(long, default_value_t = DenoiserSpec::default().width)]
    pub width: usize,
    #[arg(long, default_value_t = DenoiserTraining::default().patch)]
    pub patch: usize,
    /// Noise level of the training pairs.
    #[arg(long, default_value_t = DenoiserTraining::default().sigma)]
    pub sigma: f64,
    #[arg(long, short = 'o', default_value = "models/denoiser.params")]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct TrainConfidenceArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Penalty on under-confident predictions.
    #[arg(long, default_value_t = TrainConfig::default().p_under)]
    pub p_under: f64,
    /// Penalty on over-confident predictions.
    #[arg(long, default_value_t = TrainConfig::default().p_over)]
    pub p_over: f64,
    #[arg(long, short = 'o', default_value = "models/confidence.params")]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Denoiser parameter file; without it only the reliable views work.
    #[arg(long)]
    pub denoiser: Option<PathBuf>,
    /// Confidence parameter file; without it confidence and guided fusion answer 503.
    #[arg(long)]
    pub confidence: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SynthCorpusArgs {
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 80)]
    pub height: usize,
    #[arg(long, default_value_t = 80)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
