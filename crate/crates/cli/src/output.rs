use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ccid_core::imagecore::{save_image, save_rgb_png};
use ccid_core::Image;

/// All-or-nothing output: files are written under temporary names and only
/// renamed into place by [`Outputs::commit`]. Dropping without committing
/// removes whatever was staged.
pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        Ok(Self {
            dir: dir.into(),
            staged: Vec::new(),
        })
    }

    /// Writes `path` through `write`, which receives the temporary path.
    /// The temporary name keeps the extension so format detection works.
    pub fn stage(&mut self, path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let parent = path.parent().unwrap_or(Path::new(""));
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
        let tmp = parent.join(format!(".partial-{}", name.to_string_lossy()));
        self.staged.push((tmp.clone(), path.to_path_buf()));
        write(&tmp).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn image(&mut self, name: &str, img: &Image<f64>) -> Result<()> {
        let path = self.dir.join(name);
        self.image_at(&path, img)
    }

    pub fn image_at(&mut self, path: &Path, img: &Image<f64>) -> Result<()> {
        self.stage(path, |tmp| Ok(save_image(img, tmp)?))
    }

    pub fn rgb(&mut self, name: &str, rgb: &[u8], height: usize, width: usize) -> Result<()> {
        let path = self.dir.join(name);
        self.stage(&path, |tmp| Ok(save_rgb_png(rgb, height, width, tmp)?))
    }

    pub fn text_at(&mut self, path: &Path, text: &str) -> Result<()> {
        self.stage(path, |tmp| Ok(std::fs::write(tmp, text)?))
    }

    /// Moves every staged file into place and returns the final paths.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.staged.len());
        while !self.staged.is_empty() {
            let (tmp, path) = self.staged.remove(0);
            if let Err(err) = std::fs::rename(&tmp, &path) {
                let _ = std::fs::remove_file(&tmp);
                return Err(err).with_context(|| format!("cannot move output to {}", path.display()));
            }
            done.push(path);
        }
        Ok(done)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = std::fs::remove_file(tmp);
        }
    }
}
