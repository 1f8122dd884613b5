//! Dataset manifests: an ordered image list with per-image corruption
//! records, stored as TOML next to the image files.
//!
//! Paths inside a manifest are relative to the manifest file. `load`
//! resolves them and checks that every referenced file exists and that
//! occlusion rectangles fit the declared image dimensions, so commands can
//! trust a loaded manifest.

use crate::synth::{CorruptionMode, CorruptionRecord};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MANIFEST_FILE_NAME: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("manifest {path} references missing file {missing}")]
    MissingFile { path: PathBuf, missing: PathBuf },
    #[error("image {index}: occlusion rectangle ({x}, {y}, {w}, {h}) exceeds {height}x{width}")]
    OcclusionOutOfBounds {
        index: usize,
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        height: usize,
        width: usize,
    },
}

/// One image of the dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEntry {
    /// Image file, relative to the manifest.
    pub path: PathBuf,
    /// Ground-truth copy without corruption, when the dataset was
    /// synthesized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clean_path: Option<PathBuf>,
    pub corruption: CorruptionRecord,
    /// Split label: `inlier` or `outlier`.
    pub split: String,
}

/// Ordered image collection plus generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub mode: CorruptionMode,
    #[serde(rename = "image")]
    pub images: Vec<ImageEntry>,
    /// Directory the manifest was loaded from; paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Absolute path of image `i`.
    pub fn image_path(&self, i: usize) -> PathBuf {
        self.base_dir.join(&self.images[i].path)
    }

    /// Absolute path of the clean copy of image `i`, when present.
    pub fn clean_path(&self, i: usize) -> Option<PathBuf> {
        self.images[i]
            .clean_path
            .as_ref()
            .map(|p| self.base_dir.join(p))
    }

    /// Writes the manifest as TOML.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ManifestError> {
        let path = path.as_ref();
        let text = toml::to_string_pretty(self).map_err(|e| ManifestError::Malformed {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads and validates a manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: DatasetManifest =
            toml::from_str(&text).map_err(|e| ManifestError::Malformed {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        manifest.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        manifest.validate(path)?;
        Ok(manifest)
    }

    fn validate(&self, manifest_path: &Path) -> Result<(), ManifestError> {
        for (index, entry) in self.images.iter().enumerate() {
            for candidate in [Some(&entry.path), entry.clean_path.as_ref()]
                .into_iter()
                .flatten()
            {
                let resolved = self.base_dir.join(candidate);
                if !resolved.is_file() {
                    return Err(ManifestError::MissingFile {
                        path: manifest_path.to_path_buf(),
                        missing: resolved,
                    });
                }
            }
            if let CorruptionRecord::Occlusion { x, y, w, h, .. } = &entry.corruption {
                if x + w > self.width || y + h > self.height {
                    return Err(ManifestError::OcclusionOutOfBounds {
                        index,
                        x: *x,
                        y: *y,
                        w: *w,
                        h: *h,
                        height: self.height,
                        width: self.width,
                    });
                }
            }
        }
        Ok(())
    }
}
