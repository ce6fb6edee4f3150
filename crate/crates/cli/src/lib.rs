//! The `ccid` command line: batch denoising, fusion, weight sweeps, dataset
//! generation, training and the HTTP server.

mod args;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ccid_core::fusion::{fuse, FusionParams};
use ccid_core::imagecore::{add_noise, load_image};
use ccid_core::metrics::{sweep, uniform_grid, SweepResult};
use ccid_core::models::{
    build_dataset, confidence_stats, constant_baseline_loss, train_confidence, train_denoiser,
    Dataset, Denoiser, DenoiserSpec, DenoiserTraining,
};
use ccid_core::nn::{load_params, save_params};
use ccid_core::pipeline::{Artifacts, Pipeline};
use ccid_core::visual::{colorize_confidence, residual_view};
use ccid_core::{synthetic, Image, ModelParamsF32, NoiseSpec, ReliableFilterSpec};

pub use args::*;
pub use output::Outputs;

/// Cell size of the colorized confidence image: one cell per 8×8 region.
const CONFIDENCE_CELL: usize = 8;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Fuse(a) => cmd_fuse(&a),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::GenDataset(a) => cmd_gen_dataset(&a).map(|_| ()),
        Command::TrainDenoiser(a) => cmd_train_denoiser(&a),
        Command::TrainConfidence(a) => cmd_train_confidence(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::SynthCorpus(a) => cmd_synth_corpus(&a),
    }
}

fn load(path: &Path) -> Result<Image<f64>> {
    load_image(path).with_context(|| format!("cannot read image {}", path.display()))
}

fn load_model(path: &Path, what: &str) -> Result<ModelParamsF32> {
    if !path.is_file() {
        bail!("{what} parameters not found at {}", path.display());
    }
    load_params(path).with_context(|| format!("cannot load {what} parameters from {}", path.display()))
}

pub fn load_denoiser(path: &Path) -> Result<Denoiser> {
    Ok(Denoiser::new(load_model(path, "denoiser")?)?)
}

/// Reliable and learned images plus whatever the models produced.
pub struct Prepared {
    pub artifacts: Artifacts,
    /// The input before synthetic noise was added, if any was.
    pub clean: Option<Image<f64>>,
}

/// Loads or computes the images to fuse. The confidence model is loaded
/// only when `need_confidence` is set.
pub fn prepare(source: &SourceArgs, need_confidence: bool) -> Result<Prepared> {
    if let (Some(r), Some(h)) = (&source.pair.reliable, &source.pair.hallucinatory) {
        ensure!(!need_confidence, "guided fusion needs the models; pass --input instead of an image pair");
        let (reliable, dnn) = (load(r)?, load(h)?);
        ensure!(
            reliable.dims() == dnn.dims(),
            "{} is {:?} but {} is {:?}",
            r.display(),
            reliable.dims(),
            h.display(),
            dnn.dims()
        );
        let residual = Image::zeros(dnn.height(), dnn.width());
        let artifacts = Artifacts {
            noisy: dnn.clone(),
            reliable,
            dnn,
            residual,
            confidence: None,
        };
        return Ok(Prepared { artifacts, clean: None });
    }
    let input = source.input.as_deref().context("no --input given")?;
    let mut noisy = load(input)?;
    let mut clean = None;
    if let Some(sigma) = source.noise_sigma {
        let spec = NoiseSpec {
            kind: source.noise_kind,
            sigma,
            seed: source.seed,
        };
        let noised = add_noise(&noisy, &spec)?;
        clean = Some(std::mem::replace(&mut noisy, noised));
    }
    let filter = source.filter.spec(source.mode);
    let artifacts = match source.mode {
        Mode::SuperResolution => {
            ensure!(!need_confidence, "confidence is not estimated in super-resolution mode");
            let hr = source.hr.as_deref().context("super-resolution needs --hr")?;
            Pipeline::super_resolve(&noisy, &load(hr)?, &filter)?
        }
        Mode::Denoise => {
            let denoiser = load_denoiser(&source.models.denoiser)?;
            let confidence = match need_confidence {
                true => Some(load_model(&source.models.confidence, "confidence")?),
                false => None,
            };
            Pipeline::new(Some(denoiser), confidence)?.denoise(&noisy, &filter)?
        }
    };
    Ok(Prepared { artifacts, clean })
}

fn fuse_prepared(a: &Artifacts, params: &FusionParams) -> Result<Image<f64>> {
    Ok(fuse(&a.reliable, &a.dnn, a.confidence.as_ref(), params)?)
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<()> {
    let params = args.fusion.params();
    params.validate()?;
    let models_run = args.source.pair.reliable.is_none() && args.source.mode == Mode::Denoise;
    let prepared = prepare(&args.source, models_run)?;
    let a = &prepared.artifacts;
    let fused = fuse_prepared(a, &params)?;

    let mut out = Outputs::new(&args.out_dir)?;
    out.image("reliable.png", &a.reliable)?;
    out.image("dnn.png", &a.dnn)?;
    out.image("fused.png", &fused)?;
    if models_run {
        out.image("residual.png", &residual_view(&a.residual))?;
        let map = a.confidence.as_ref().context("confidence map missing")?;
        let (rgb, h, w) = colorize_confidence(map, params.threshold, CONFIDENCE_CELL)?;
        out.rgb("confidence.png", &rgb, h, w)?;
    }
    for path in out.commit()? {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn cmd_fuse(args: &FuseArgs) -> Result<()> {
    let params = args.fusion.params();
    params.validate()?;
    let prepared = prepare(&args.source, params.guided)?;
    let fused = fuse_prepared(&prepared.artifacts, &params)?;
    let mut out = Outputs::new(args.output.parent().unwrap_or(Path::new("")))?;
    out.image_at(&args.output, &fused)?;
    out.commit()?;
    Ok(())
}

/// Runs the sweep, writes the CSV (and optional images) and returns the result.
pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepResult> {
    let params = args.fusion.params();
    params.validate()?;
    let grid = match &args.grid {
        Some(grid) => grid.clone(),
        None => {
            ensure!(args.steps > 0, "--steps must be positive");
            uniform_grid(args.steps)
        }
    };
    let prepared = prepare(&args.source, params.guided)?;
    let clean = match (&args.clean, prepared.clean) {
        (Some(path), _) => load(path)?,
        (None, Some(clean)) => clean,
        (None, None) => bail!("a sweep needs ground truth: pass --clean or add noise with --noise-sigma"),
    };
    let a = &prepared.artifacts;
    let result = sweep(&a.reliable, &a.dnn, &clean, a.confidence.as_ref(), &params, &grid)?;

    let csv = result.to_csv();
    let mut out = None;
    if let Some(dir) = &args.fused_dir {
        let mut o = Outputs::new(dir)?;
        for &w in &grid {
            let fused = fuse_prepared(a, &params.with_weight(w))?;
            o.image(&format!("fused_w{w:.3}.png"), &fused)?;
        }
        out = Some(o);
    }
    match &args.output {
        Some(path) => {
            let o = out.get_or_insert(Outputs::new(path.parent().unwrap_or(Path::new("")))?);
            o.text_at(path, &csv)?;
        }
        None => print!("{csv}"),
    }
    if let Some(o) = out {
        o.commit()?;
    }
    Ok(result)
}

/// Clean images of a corpus directory, in file name order.
pub fn load_corpus(dir: &Path) -> Result<Vec<Image<f64>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            matches!(ext.as_deref(), Some("png" | "pgm"))
        })
        .collect();
    paths.sort();
    ensure!(!paths.is_empty(), "no PNG or PGM images in {}", dir.display());
    paths.iter().map(|p| load(p)).collect()
}

fn dataset(args: &DatasetArgs, seed: u64) -> Result<Dataset> {
    let images = load_corpus(&args.corpus.corpus)?;
    let denoiser = load_denoiser(&args.denoiser)?;
    let filter: ReliableFilterSpec = args.filter.spec(Mode::Denoise);
    std::fs::create_dir_all(&args.cache_dir)
        .with_context(|| format!("cannot create cache directory {}", args.cache_dir.display()))?;
    Ok(build_dataset(&images, &denoiser, &filter, args.patch, &args.cache_dir, seed)?)
}

pub fn cmd_gen_dataset(args: &GenDatasetArgs) -> Result<Dataset> {
    let ds = dataset(&args.dataset, args.seed)?;
    println!(
        "{} items in {} ({} computed, {} reused)",
        ds.len(),
        args.dataset.cache_dir.display(),
        ds.computed,
        ds.reused
    );
    Ok(ds)
}

fn loss_csv_path(train: &TrainArgs, output: &Path) -> PathBuf {
    train.loss_csv.clone().unwrap_or_else(|| output.with_extension("csv"))
}

pub fn cmd_train_denoiser(args: &TrainDenoiserArgs) -> Result<()> {
    let images = load_corpus(&args.corpus.corpus)?;
    let training = DenoiserTraining {
        spec: DenoiserSpec::new(args.depth, args.width)?,
        patch: args.patch,
        sigma: args.sigma,
    };
    let trained = train_denoiser(&images, &args.train.config(), &training)?;
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in trained.losses.iter().enumerate() {
        writeln!(csv, "{},{loss}", epoch + 1)?;
    }
    write_model(&args.output, &trained.params, &loss_csv_path(&args.train, &args.output), &csv)?;
    if let Some(last) = trained.losses.last() {
        println!("final training loss {last:.6}");
    }
    Ok(())
}

pub fn cmd_train_confidence(args: &TrainConfidenceArgs) -> Result<()> {
    let config = ccid_core::TrainConfig {
        p_under: args.p_under,
        p_over: args.p_over,
        ..args.train.config()
    };
    config.validate()?;
    let ds = dataset(&args.dataset, config.seed)?;
    println!("{} items ({} computed, {} reused)", ds.len(), ds.computed, ds.reused);
    let trained = train_confidence(&ds, &config)?;
    let mut csv = String::from("epoch,train_loss,val_loss\n");
    for (epoch, (t, v)) in trained.train_loss.iter().zip(&trained.val_loss).enumerate() {
        writeln!(csv, "{},{t},{v}", epoch + 1)?;
    }
    write_model(&args.output, &trained.params, &loss_csv_path(&args.train, &args.output), &csv)?;

    let baseline = constant_baseline_loss(&ds, &trained.val_indices, 0.8, &config)?;
    let stats = confidence_stats(&trained.params, trained.val_indices.iter().map(|&i| &ds.items[i]))?;
    if let Some(v) = trained.val_loss.last() {
        println!("validation loss {v:.6} (constant 0.8 predictor: {baseline:.6})");
    }
    println!(
        "target - prediction: median {:.4}, mean {:.4}; |diff| < 0.05 for {:.1}% of regions",
        stats.signed.median,
        stats.signed.mean,
        100.0 * stats.fraction_within_005
    );
    Ok(())
}

fn write_model(path: &Path, params: &ModelParamsF32, csv_path: &Path, csv: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut out = Outputs::new(dir)?;
    out.stage(path, |tmp| Ok(save_params(params, tmp)?))?;
    out.text_at(csv_path, csv)?;
    for p in out.commit()? {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let denoiser = args.denoiser.as_deref().map(load_denoiser).transpose()?;
    let confidence = args
        .confidence
        .as_deref()
        .map(|p| load_model(p, "confidence"))
        .transpose()?;
    let state = ccid_service::AppState::new(Pipeline::new(denoiser, confidence)?);
    let addr = std::net::SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    println!("listening on http://{addr}");
    runtime
        .block_on(ccid_service::serve(addr, state))
        .with_context(|| format!("server on {addr} failed"))
}

pub fn cmd_synth_corpus(args: &SynthCorpusArgs) -> Result<()> {
    ensure!(args.count > 0, "--count must be positive");
    let mut out = Outputs::new(&args.out_dir)?;
    for (i, img) in synthetic::corpus(args.count, args.height, args.width, args.seed).iter().enumerate() {
        out.image(&format!("scene_{i:03}.png"), img)?;
    }
    out.commit()?;
    Ok(())
}
