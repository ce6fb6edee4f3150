//! Confidence-net training data, persisted to a content-addressed cache.

use std::path::{Path, PathBuf};

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{confidence_ground_truth, Denoiser, REGION};
use crate::error::{ensure, Error, Result};
use crate::filters::{reliable_denoise, ReliableFilterSpec};
use crate::imagecore::{add_noise, augment_dihedral, patch_offsets, Image, NoiseSpec, MAX_SIGMA};
use crate::nn::Tensor;
use crate::rng::{self, GENERATOR_VERSION};

pub const DATA_MAGIC: &[u8; 8] = b"CCIDDATA";
pub const DATA_VERSION: u32 = 1;

/// One training example: `(noisy, reliable, residual)` channels and the
/// regional confidence target.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetItem {
    pub input: Tensor<f32>,
    pub target: Image<f32>,
    /// Noise level (8-bit scale) the item was synthesised with.
    pub sigma: f32,
}

/// Where an item came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ItemOrigin {
    pub image: usize,
    pub offset: (usize, usize),
    pub augmentation: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    pub origins: Vec<ItemOrigin>,
    pub paths: Vec<PathBuf>,
    /// Items synthesised during this build.
    pub computed: usize,
    /// Items read back from the cache.
    pub reused: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn image_id(img: &Image<f64>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((img.height() as u64).to_le_bytes());
    h.update((img.width() as u64).to_le_bytes());
    for v in img.pixels() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

/// Cuts patches (stride = patch size) from every image, applies all eight
/// dihedral variants, adds Gaussian noise with a level drawn uniformly from
/// `[0, 100]` per item, and runs both denoisers. Items already present in
/// `cache_dir` are loaded instead of recomputed.
pub fn build_dataset(
    images: &[Image<f64>],
    denoiser: &Denoiser,
    filter: &ReliableFilterSpec,
    patch: usize,
    cache_dir: &Path,
    seed: u64,
) -> Result<Dataset> {
    ensure!(!images.is_empty(), InvalidParameter, "no images to build a dataset from");
    ensure!(
        patch >= REGION && patch % REGION == 0,
        InvalidParameter,
        "patch size must be a positive multiple of {REGION}, got {patch}"
    );
    filter.validate()?;
    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;

    let mut pipeline = Sha256::new();
    pipeline.update(denoiser.params().fingerprint());
    pipeline.update(filter.fingerprint());
    let pipeline = pipeline.finalize();

    let mut dataset = Dataset::default();
    for (index, img) in images.iter().enumerate() {
        if img.height() < patch || img.width() < patch {
            continue;
        }
        let id = image_id(img);
        let id_word = u64::from_le_bytes(id[..8].try_into().expect("8 bytes"));
        for (y, x) in patch_offsets(img.height(), img.width(), patch, patch)? {
            let clean = crop_at(img, y, x, patch);
            for aug in 0..8 {
                let (sigma, noise_seed) = sample_item_noise(seed, id_word, (y, x), aug);

                let mut key = Sha256::new();
                key.update(b"ccid-item");
                key.update(id);
                key.update((y as u64).to_le_bytes());
                key.update((x as u64).to_le_bytes());
                key.update((aug as u64).to_le_bytes());
                key.update(sigma.to_le_bytes());
                key.update(GENERATOR_VERSION.to_le_bytes());
                key.update(noise_seed.to_le_bytes());
                key.update((patch as u64).to_le_bytes());
                key.update(pipeline);
                let path = cache_dir.join(format!("{}.bin", hex::encode(key.finalize())));

                let cached = path.exists().then(|| read_item(&path).ok()).flatten();
                let item = match cached.filter(|it| it.input.shape() == [3, patch, patch]) {
                    Some(item) => {
                        dataset.reused += 1;
                        item
                    }
                    None => {
                        let variant = augment_dihedral(&clean, aug)?;
                        let item = synthesize(&variant, sigma, noise_seed, denoiser, filter)?;
                        write_item(&path, &item)?;
                        dataset.computed += 1;
                        item
                    }
                };
                dataset.items.push(item);
                dataset.origins.push(ItemOrigin {
                    image: index,
                    offset: (y, x),
                    augmentation: aug,
                });
                dataset.paths.push(path);
            }
        }
    }
    ensure!(
        !dataset.is_empty(),
        InvalidParameter,
        "no image is at least {patch}x{patch}"
    );
    Ok(dataset)
}

/// Noise level, uniform on `[0, 100]`, and noise seed of one item. Both
/// depend only on the dataset seed and the item's identity.
pub fn sample_item_noise(seed: u64, image_word: u64, offset: (usize, usize), augmentation: usize) -> (f64, u64) {
    let mut r = rng::stream(seed, &[image_word, offset.0 as u64, offset.1 as u64, augmentation as u64]);
    (r.random_range(0.0..=MAX_SIGMA), r.random())
}

fn crop_at(img: &Image<f64>, y: usize, x: usize, size: usize) -> Image<f64> {
    Image::from_fn(size, size, |py, px| img[(y + py, x + px)])
}

fn synthesize(
    clean: &Image<f64>,
    sigma: f64,
    noise_seed: u64,
    denoiser: &Denoiser,
    filter: &ReliableFilterSpec,
) -> Result<DatasetItem> {
    let noisy = add_noise(clean, &NoiseSpec::gaussian(sigma, noise_seed))?;
    let (_, residual) = denoiser.denoise(&noisy)?;
    let reliable = reliable_denoise(&noisy, filter)?;
    let (noisy, reliable, residual) = (noisy.cast::<f32>(), reliable.cast::<f32>(), residual.cast::<f32>());
    // The target is derived from the stored (single precision) channels so
    // it can be recomputed exactly from a cache file.
    let dnn = noisy.cast::<f64>().zip_map(&residual.cast::<f64>(), |a, b| a - b)?;
    let target = confidence_ground_truth(clean, &dnn, MAX_SIGMA)?;
    Ok(DatasetItem {
        input: Tensor::from_images(&[&noisy, &reliable, &residual])?,
        target: target.as_image().cast::<f32>(),
        sigma: sigma as f32,
    })
}

pub fn write_item(path: &Path, item: &DatasetItem) -> Result<()> {
    let (_, h, w) = item.input.dims3()?;
    let mut out = Vec::with_capacity(28 + 4 * (item.input.len() + item.target.len()));
    out.extend_from_slice(DATA_MAGIC);
    out.extend_from_slice(&DATA_VERSION.to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&item.sigma.to_le_bytes());
    for v in item.input.data().iter().chain(item.target.pixels()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, out).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_item(path: &Path) -> Result<DatasetItem> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::format(path, reason);
    if bytes.len() < 24 || &bytes[..8] != DATA_MAGIC {
        return Err(bad("not a dataset item"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(8) != DATA_VERSION {
        return Err(bad("unsupported dataset item version"));
    }
    let (h, w) = (word(12) as usize, word(16) as usize);
    let sigma = f32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
    if h == 0 || w == 0 || h % REGION != 0 || w % REGION != 0 {
        return Err(bad("patch dims must be positive multiples of 8"));
    }
    let (n_in, n_t) = (3 * h * w, (h / REGION) * (w / REGION));
    if bytes.len() != 24 + 4 * (n_in + n_t) {
        return Err(bad("truncated or oversized payload"));
    }
    let values: Vec<f32> = bytes[24..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(DatasetItem {
        input: Tensor::new(vec![3, h, w], values[..n_in].to_vec())?,
        target: Image::new(h / REGION, w / REGION, values[n_in..].to_vec())?,
        sigma,
    })
}
