//! Synthetic benchmark datasets: low-rank smooth images with seeded
//! corruptions.
//!
//! A clean image is a random mix of `rank` fixed low-frequency cosine basis
//! images, affinely mapped into `[0, 1]`, standing in for the aligned face
//! sets the original experiments used: structured, highly correlated data
//! whose principal subspace is small. Corruptions are either a fixed
//! high-texture patch pasted at a random location per image (occlusion) or
//! wholesale replacement of an image by one fixed texture image. The patch
//! texture is seeded value noise with a short lattice spacing, so its
//! gradient orientations are spread over all quadrants and look nothing
//! like the smooth signal's.

use crate::orientation::{GrayImage, OrientationError};
use crate::stats::SplitMix64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid fraction {0}: must lie in [0, 1]")]
    InvalidFraction(f64),
    #[error("patch {patch}x{patch} does not fit a {height}x{width} image")]
    PatchTooLarge {
        patch: usize,
        height: usize,
        width: usize,
    },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("need at least one image")]
    ZeroImages,
    #[error(transparent)]
    Orientation(#[from] OrientationError),
}

/// What happened to one image of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorruptionRecord {
    None,
    /// A `w x h` patch of foreign texture pasted with its top-left corner
    /// at `(x, y)` (column, row).
    Occlusion {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        source: String,
    },
    /// The whole image was replaced by the named source.
    Replacement {
        source: String,
    },
}

impl CorruptionRecord {
    pub fn is_corrupted(&self) -> bool {
        !matches!(self, CorruptionRecord::None)
    }

    /// Mask of pixels left untouched by the corruption.
    pub fn clean_mask(&self, height: usize, width: usize) -> Vec<bool> {
        match self {
            CorruptionRecord::None => vec![true; height * width],
            CorruptionRecord::Occlusion { x, y, w, h, .. } => {
                let mut mask = vec![true; height * width];
                for row in *y..(*y + *h).min(height) {
                    for col in *x..(*x + *w).min(width) {
                        mask[row * width + col] = false;
                    }
                }
                mask
            }
            CorruptionRecord::Replacement { .. } => vec![false; height * width],
        }
    }
}

/// Corruption regime applied to a fraction of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionMode {
    None,
    Occlusion,
    Replacement,
}

impl std::str::FromStr for CorruptionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "occlusion" => Ok(Self::Occlusion),
            "replacement" | "replace" => Ok(Self::Replacement),
            other => Err(format!("unknown corruption mode {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub n: usize,
    pub height: usize,
    pub width: usize,
    /// Number of smooth basis images mixed into each clean image.
    pub rank: usize,
    pub mode: CorruptionMode,
    /// Fraction of images to corrupt, rounded to the nearest count.
    pub fraction: f64,
    /// Side length of the occlusion patch.
    pub patch: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 50,
            height: 128,
            width: 128,
            rank: 3,
            mode: CorruptionMode::None,
            fraction: 0.2,
            patch: 45,
            seed: 42,
        }
    }
}

/// A synthesized dataset, before any file is written.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    /// Ground-truth images, untouched by corruption.
    pub clean: Vec<GrayImage>,
    /// Images after corruption; equal to `clean` where records say `None`.
    pub corrupted: Vec<GrayImage>,
    pub records: Vec<CorruptionRecord>,
    pub config: SynthConfig,
}

impl SynthDataset {
    /// Indices of images carrying a corruption.
    pub fn corrupted_indices(&self) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_corrupted())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Low-frequency cosine basis image for index `j`.
///
/// Frequencies walk a fixed diagonal-ish schedule so every basis image is
/// smooth but no two share a gradient field.
fn basis_image(j: usize, height: usize, width: usize) -> Vec<f64> {
    // (fx, fy) pairs, skipping (0, 0)
    let freqs = [
        (1, 0),
        (0, 1),
        (1, 1),
        (2, 1),
        (1, 2),
        (2, 2),
        (3, 1),
        (1, 3),
    ];
    let (fx, fy) = freqs[j % freqs.len()];
    let harmonic = 1 + j / freqs.len();
    let fx = (fx * harmonic) as f64;
    let fy = (fy * harmonic) as f64;
    let mut data = Vec::with_capacity(height * width);
    for row in 0..height {
        for col in 0..width {
            let u = PI * fx * (col as f64 + 0.5) / width as f64;
            let v = PI * fy * (row as f64 + 0.5) / height as f64;
            data.push(u.cos() * v.cos());
        }
    }
    data
}

/// Seeded value noise in `[0, 1]`: random lattice values, bilinear
/// interpolation, two octaves. `cell` is the base lattice spacing in pixels.
fn value_noise(height: usize, width: usize, cell: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let octave = |height: usize, width: usize, cell: usize, rng: &mut SplitMix64| -> Vec<f64> {
        let gw = width / cell + 2;
        let gh = height / cell + 2;
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.next_f64()).collect();
        let mut out = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                let fx = col as f64 / cell as f64;
                let fy = row as f64 / cell as f64;
                let (ix, iy) = (fx as usize, fy as usize);
                let (tx, ty) = (fx - ix as f64, fy - iy as f64);
                let v00 = lattice[iy * gw + ix];
                let v10 = lattice[iy * gw + ix + 1];
                let v01 = lattice[(iy + 1) * gw + ix];
                let v11 = lattice[(iy + 1) * gw + ix + 1];
                let top = v00 * (1.0 - tx) + v10 * tx;
                let bottom = v01 * (1.0 - tx) + v11 * tx;
                out.push(top * (1.0 - ty) + bottom * ty);
            }
        }
        out
    };
    let coarse = octave(height, width, cell.max(2), rng);
    let fine = octave(height, width, 2, rng);
    coarse
        .into_iter()
        .zip(fine)
        .map(|(a, b)| 0.6 * a + 0.4 * b)
        .collect()
}

/// Generates the dataset described by `config`. Deterministic per seed.
pub fn synthesize(config: SynthConfig) -> Result<SynthDataset, SynthError> {
    if config.n == 0 {
        return Err(SynthError::ZeroImages);
    }
    if config.rank == 0 {
        return Err(SynthError::ZeroRank);
    }
    if !(0.0..=1.0).contains(&config.fraction) || !config.fraction.is_finite() {
        return Err(SynthError::InvalidFraction(config.fraction));
    }
    if config.mode == CorruptionMode::Occlusion
        && (config.patch > config.height || config.patch > config.width)
    {
        return Err(SynthError::PatchTooLarge {
            patch: config.patch,
            height: config.height,
            width: config.width,
        });
    }

    let mut rng = SplitMix64::new(config.seed);
    let (height, width) = (config.height, config.width);
    let basis: Vec<Vec<f64>> = (0..config.rank)
        .map(|j| basis_image(j, height, width))
        .collect();

    let clean: Vec<GrayImage> = (0..config.n)
        .map(|_| {
            let weights: Vec<f64> = (0..config.rank)
                .map(|_| 2.0 * rng.next_f64() - 1.0)
                .collect();
            let scale = 0.5 / config.rank as f64;
            let data: Vec<f64> = (0..height * width)
                .map(|k| {
                    let mix: f64 = basis.iter().zip(&weights).map(|(b, w)| w * b[k]).sum();
                    0.5 + scale * mix
                })
                .collect();
            GrayImage::new(height, width, data)
        })
        .collect::<Result<_, _>>()?;

    let corrupt_count = (config.fraction * config.n as f64).round() as usize;
    let mut order: Vec<usize> = (0..config.n).collect();
    // Fisher-Yates; the first corrupt_count entries are the victims.
    for i in (1..order.len()).rev() {
        let j = rng.next_below(i + 1);
        order.swap(i, j);
    }
    let mut victims = order[..corrupt_count].to_vec();
    victims.sort_unstable();

    let mut corrupted = clean.clone();
    let mut records = vec![CorruptionRecord::None; config.n];
    match config.mode {
        CorruptionMode::None => {}
        CorruptionMode::Occlusion => {
            let patch = config.patch;
            let texture = value_noise(patch, patch, 3, &mut rng);
            for &i in &victims {
                let x = rng.next_below(width - patch + 1);
                let y = rng.next_below(height - patch + 1);
                let mut data = corrupted[i].as_slice().to_vec();
                for pr in 0..patch {
                    for pc in 0..patch {
                        data[(y + pr) * width + (x + pc)] = texture[pr * patch + pc];
                    }
                }
                corrupted[i] = GrayImage::new(height, width, data)?;
                records[i] = CorruptionRecord::Occlusion {
                    x,
                    y,
                    w: patch,
                    h: patch,
                    source: "value-noise".into(),
                };
            }
        }
        CorruptionMode::Replacement => {
            let texture = GrayImage::new(height, width, value_noise(height, width, 3, &mut rng))?;
            for &i in &victims {
                corrupted[i] = texture.clone();
                records[i] = CorruptionRecord::Replacement {
                    source: "value-noise".into(),
                };
            }
        }
    }

    Ok(SynthDataset {
        clean,
        corrupted,
        records,
        config,
    })
}
