//! The operations behind the `igo-pca` command-line tool.
//!
//! Each command is an ordinary function over explicit inputs so tests and
//! examples can drive the same code paths without a process boundary. File
//! output is CSV (header row, '.' decimal separator, LF line endings, one
//! schema-version comment line on top) plus the binary containers from
//! [`crate::io`].

use crate::baseline::{BaselineError, L2Model};
use crate::igo::{self, IgoModel, ModelError, OutlierAxis};
use crate::io::{self, IoFormatError, Model};
use crate::linalg::{LinalgError, Parallelism};
use crate::manifest::{DatasetManifest, ImageEntry, ManifestError, MANIFEST_FILE_NAME};
use crate::orientation::{
    compute_orientation, GradientFilterSpec, GrayImage, OrientationError, OrientationImage,
    DEFAULT_MAGNITUDE_FLOOR,
};
use crate::stats::{self, random_orientation_image, KsResult, SplitMix64, StatsError};
use crate::synth::{self, CorruptionMode, SynthConfig, SynthDataset, SynthError};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Format(#[from] IoFormatError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest has no ground-truth clean copies; re-run synth to keep them")]
    MissingGroundTruth,
    #[error("need at least {needed} images, got {got}")]
    NotEnoughImages { needed: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
}

impl CommandError {
    /// Stable one-word class used as the stderr prefix.
    pub fn class(&self) -> &'static str {
        match self {
            CommandError::Linalg(e) => match e {
                LinalgError::Dimension { .. } | LinalgError::NonFinite { .. } => "dimension",
                LinalgError::NotHermitian { .. } => "symmetry",
                LinalgError::NoConvergence(_) => "convergence",
                LinalgError::RankExceeded { .. } | LinalgError::ZeroComponents => "rank",
            },
            CommandError::Orientation(_) => "dimension",
            CommandError::Model(e) => match e {
                ModelError::Linalg(LinalgError::RankExceeded { .. }) => "rank",
                ModelError::IndexOutOfRange { .. } => "index",
                _ => "dimension",
            },
            CommandError::Baseline(e) => match e {
                BaselineError::Linalg(LinalgError::RankExceeded { .. }) => "rank",
                _ => "dimension",
            },
            CommandError::Stats(e) => match e {
                StatsError::SampleSize { .. } => "sample-size",
                _ => "domain",
            },
            CommandError::Synth(_) => "domain",
            CommandError::Manifest(_) => "manifest",
            CommandError::Format(_) => "format",
            CommandError::Io { .. } => "io",
            CommandError::MissingGroundTruth => "manifest",
            CommandError::NotEnoughImages { .. } => "usage",
            CommandError::Config(_) => "config",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A CSV table with a schema-version comment line.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub schema: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CommandError> {
        let path = path.as_ref();
        let mut text = format!("# {}\n{}\n", self.schema, self.header.join(","));
        for row in &self.rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(io_err(path))
    }
}

// ---------------------------------------------------------------------------
// synth

/// Writes a synthetic dataset (16-bit PGM), its clean copies and the
/// manifest. Returns the manifest path.
pub fn synth(config: SynthConfig, out_dir: impl AsRef<Path>) -> Result<PathBuf, CommandError> {
    let out_dir = out_dir.as_ref();
    let clean_dir = out_dir.join("clean");
    std::fs::create_dir_all(&clean_dir).map_err(io_err(&clean_dir))?;
    let dataset = synth::synthesize(config)?;
    let mut entries = Vec::with_capacity(dataset.corrupted.len());
    for (i, (img, clean)) in dataset.corrupted.iter().zip(&dataset.clean).enumerate() {
        let name = format!("img_{i:03}.pgm");
        let clean_name = format!("clean/img_{i:03}.pgm");
        io::save_pgm(img, out_dir.join(&name))?;
        io::save_pgm(clean, out_dir.join(&clean_name))?;
        let record = dataset.records[i].clone();
        entries.push(ImageEntry {
            path: name.into(),
            clean_path: Some(clean_name.into()),
            split: if record.is_corrupted() {
                "outlier"
            } else {
                "inlier"
            }
            .into(),
            corruption: record,
        });
    }
    let manifest = DatasetManifest {
        height: config.height,
        width: config.width,
        seed: config.seed,
        mode: config.mode,
        images: entries,
        base_dir: out_dir.to_path_buf(),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE_NAME);
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Igo,
    L2,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "igo" => Ok(Self::Igo),
            "l2" => Ok(Self::L2),
            other => Err(format!("unknown method {other}, expected igo or l2")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    pub method: Method,
    pub k: usize,
    pub filter: GradientFilterSpec,
    pub magnitude_floor: f64,
    pub center: bool,
    pub parallelism: Parallelism,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            method: Method::Igo,
            k: 5,
            filter: GradientFilterSpec::CentralDifference,
            magnitude_floor: DEFAULT_MAGNITUDE_FLOOR,
            center: false,
            parallelism: Parallelism::default(),
        }
    }
}

fn load_manifest_images(manifest: &DatasetManifest) -> Result<Vec<GrayImage>, CommandError> {
    (0..manifest.len())
        .map(|i| Ok(io::load_image(manifest.image_path(i))?))
        .collect()
}

fn orientations_of(
    images: &[GrayImage],
    filter: GradientFilterSpec,
    floor: f64,
    parallelism: Parallelism,
) -> Result<Vec<OrientationImage>, CommandError> {
    match parallelism {
        Parallelism::Serial => images
            .iter()
            .map(|img| Ok(compute_orientation(img, filter, floor)?))
            .collect(),
        Parallelism::Rayon => images
            .par_iter()
            .map(|img| Ok(compute_orientation(img, filter, floor)?))
            .collect(),
    }
}

/// Fits a model over a manifest's images and saves it. Returns the model
/// (for the eigenvalue printout). When `components_out` is given, each
/// basis component is additionally written there as an image.
pub fn fit(
    manifest_path: impl AsRef<Path>,
    settings: FitSettings,
    out: impl AsRef<Path>,
    components_out: Option<&Path>,
) -> Result<Model, CommandError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let images = load_manifest_images(&manifest)?;
    let model = match settings.method {
        Method::Igo => {
            let orientations = orientations_of(
                &images,
                settings.filter,
                settings.magnitude_floor,
                settings.parallelism,
            )?;
            Model::Igo(IgoModel::fit_with(
                &orientations,
                settings.k,
                igo::FitOptions {
                    filter: settings.filter,
                    center: settings.center,
                    parallelism: settings.parallelism,
                },
            )?)
        }
        Method::L2 => Model::L2(L2Model::fit_with(
            &images,
            settings.k,
            settings.parallelism,
        )?),
    };
    io::save_model(&model, out)?;
    if let Some(dir) = components_out {
        write_component_images(&model, dir)?;
    }
    Ok(model)
}

/// Writes each basis component as a viewable PGM (plus the exact
/// orientation container for complex components).
///
/// Orientation components are complex: the PGM shows the per-pixel angle
/// mapped to gray ([0, 2*pi) onto [0, 1]) and the `.ori` file keeps the full
/// angles and a mask of non-negligible moduli. Intensity components are
/// min-max normalized per component.
fn write_component_images(model: &Model, dir: &Path) -> Result<(), CommandError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    match model {
        Model::Igo(m) => {
            let (height, width) = (m.height(), m.width());
            let basis = m.subspace().basis();
            for j in 0..basis.cols() {
                let column = basis.column(j);
                let phi = crate::orientation::unembed(&column, height, width, 1e-12)?;
                io::save_orientation(&phi, dir.join(format!("component_{j:02}.ori")))?;
                let gray: Vec<f64> = phi
                    .angles()
                    .iter()
                    .map(|a| a / std::f64::consts::TAU)
                    .collect();
                let img = GrayImage::new(height, width, gray)?;
                io::save_pgm(&img, dir.join(format!("component_{j:02}.pgm")))?;
            }
        }
        Model::L2(m) => {
            for j in 0..m.components() {
                let column = m.basis_column(j);
                let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let span = (hi - lo).max(f64::MIN_POSITIVE);
                let gray: Vec<f64> = column.iter().map(|&v| (v - lo) / span).collect();
                let img = GrayImage::new(m.height(), m.width(), gray)?;
                io::save_pgm(&img, dir.join(format!("component_{j:02}.pgm")))?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reconstruct

#[derive(Debug, Clone)]
pub struct ReconstructionRow {
    pub index: usize,
    pub path: PathBuf,
    /// Orientation error per pixel between input and reconstruction.
    pub d2_per_pixel: f64,
    /// Written output file.
    pub out_path: PathBuf,
}

/// Reconstructs images through a saved model.
///
/// Orientation models write `.ori` orientation containers; intensity models
/// write PGM files. Either way the per-image error column is the
/// orientation-domain `d^2 / p` between the input image's orientations and
/// the reconstruction's, so the two model kinds are comparable. Emits
/// `reconstruction.csv` into `out_dir`.
pub fn reconstruct(
    model_path: impl AsRef<Path>,
    images: &[PathBuf],
    out_dir: impl AsRef<Path>,
    magnitude_floor: f64,
) -> Result<Vec<ReconstructionRow>, CommandError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let model = io::load_model(model_path)?;
    let mut rows = Vec::with_capacity(images.len());
    for (index, path) in images.iter().enumerate() {
        let img = io::load_image(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("image_{index}"));
        let row = match &model {
            Model::Igo(m) => {
                let phi = compute_orientation(&img, m.filter(), magnitude_floor)?;
                let rebuilt = m.reconstruct(&phi)?;
                let d2 = crate::orientation::cosine_distance(&phi, &rebuilt)?;
                let out_path = out_dir.join(format!("{stem}.ori"));
                io::save_orientation(&rebuilt, &out_path)?;
                ReconstructionRow {
                    index,
                    path: path.clone(),
                    d2_per_pixel: d2 / phi.pixel_count() as f64,
                    out_path,
                }
            }
            Model::L2(m) => {
                let rebuilt = m.reconstruct(&img)?;
                let phi_in = compute_orientation(
                    &img,
                    GradientFilterSpec::CentralDifference,
                    magnitude_floor,
                )?;
                let phi_out = compute_orientation(
                    &rebuilt,
                    GradientFilterSpec::CentralDifference,
                    magnitude_floor,
                )?;
                let d2 = crate::orientation::cosine_distance(&phi_in, &phi_out)?;
                let out_path = out_dir.join(format!("{stem}_l2.pgm"));
                io::save_pgm(&rebuilt, &out_path)?;
                ReconstructionRow {
                    index,
                    path: path.clone(),
                    d2_per_pixel: d2 / img.pixel_count() as f64,
                    out_path,
                }
            }
        };
        rows.push(row);
    }
    let table = CsvTable {
        schema: "igo-pca reconstruction csv v1",
        header: &["index", "path", "d2_per_pixel"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.index.to_string(),
                    r.path.display().to_string(),
                    format!("{}", r.d2_per_pixel),
                ]
            })
            .collect(),
    };
    table.write(out_dir.join("reconstruction.csv"))?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// compare

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub index: usize,
    pub corruption: &'static str,
    /// Pixels in the metric: clean region with a defined clean orientation.
    pub metric_pixels: usize,
    /// Orientation error `d^2 / pixels` of the orientation-PCA
    /// reconstruction against the ground truth on the metric pixels.
    pub igo_error: Option<f64>,
    /// Same metric for the intensity-PCA reconstruction, converted to
    /// orientations.
    pub l2_error: Option<f64>,
    /// Secondary intensity metric: RMSE of the l2 reconstruction on the
    /// clean region.
    pub l2_rmse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Mean orientation error over images with a non-empty metric region.
    pub igo_mean_error: f64,
    pub l2_mean_error: f64,
    /// Flatness of the normalized embedding spectrum of the corrupted set.
    pub spectrum_flatness: f64,
    /// For replacement datasets: the outlier axis found for each replaced
    /// image under a full-rank fit.
    pub outlier_axes: Vec<(usize, OutlierAxis)>,
}

/// Fits both models on the corrupted images and measures reconstruction
/// quality against the ground truth on uncorrupted regions.
///
/// Both methods are scored in the orientation domain: for intensity PCA the
/// reconstruction is converted back to orientations with the same filter.
/// Pixels enter the metric when they lie outside the image's corruption
/// and the ground-truth orientation is defined there.
pub fn compare_dataset(
    dataset: &SynthDataset,
    k: usize,
    filter: GradientFilterSpec,
    magnitude_floor: f64,
    parallelism: Parallelism,
) -> Result<CompareReport, CommandError> {
    let n = dataset.corrupted.len();
    if n < 2 {
        return Err(CommandError::NotEnoughImages { needed: 2, got: n });
    }
    let (height, width) = (dataset.config.height, dataset.config.width);
    let corrupted_phi = orientations_of(&dataset.corrupted, filter, magnitude_floor, parallelism)?;
    let clean_phi = orientations_of(&dataset.clean, filter, magnitude_floor, parallelism)?;

    let igo_model = IgoModel::fit_with(
        &corrupted_phi,
        k,
        igo::FitOptions {
            filter,
            center: false,
            parallelism,
        },
    )?;
    let l2_model = L2Model::fit_with(&dataset.corrupted, k, parallelism)?;

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let record = &dataset.records[i];
        let clean_mask = record.clean_mask(height, width);
        let truth = &clean_phi[i];
        let metric_mask: Vec<bool> = clean_mask
            .iter()
            .zip(truth.valid_mask())
            .map(|(&c, &v)| c && v)
            .collect();
        let metric_pixels = metric_mask.iter().filter(|&&m| m).count();
        let kind = match record {
            synth::CorruptionRecord::None => "none",
            synth::CorruptionRecord::Occlusion { .. } => "occlusion",
            synth::CorruptionRecord::Replacement { .. } => "replacement",
        };
        if metric_pixels == 0 {
            rows.push(CompareRow {
                index: i,
                corruption: kind,
                metric_pixels,
                igo_error: None,
                l2_error: None,
                l2_rmse: None,
            });
            continue;
        }
        let igo_rebuilt = igo_model.reconstruct(&corrupted_phi[i])?;
        let igo_d2 = crate::orientation::cosine_distance_masked(&igo_rebuilt, truth, &metric_mask)?;

        let l2_rebuilt = l2_model.reconstruct(&dataset.corrupted[i])?;
        let l2_phi = compute_orientation(&l2_rebuilt, filter, magnitude_floor)?;
        let l2_d2 = crate::orientation::cosine_distance_masked(&l2_phi, truth, &metric_mask)?;
        let sq_sum: f64 = l2_rebuilt
            .as_slice()
            .iter()
            .zip(dataset.clean[i].as_slice())
            .zip(&clean_mask)
            .filter(|(_, &m)| m)
            .map(|((&a, &b), _)| (a - b) * (a - b))
            .sum();
        let clean_pixels = clean_mask.iter().filter(|&&m| m).count();
        rows.push(CompareRow {
            index: i,
            corruption: kind,
            metric_pixels,
            igo_error: Some(igo_d2 / metric_pixels as f64),
            l2_error: Some(l2_d2 / metric_pixels as f64),
            l2_rmse: Some((sq_sum / clean_pixels as f64).sqrt()),
        });
    }

    let scored: Vec<&CompareRow> = rows.iter().filter(|r| r.igo_error.is_some()).collect();
    let igo_mean_error =
        scored.iter().filter_map(|r| r.igo_error).sum::<f64>() / scored.len().max(1) as f64;
    let l2_mean_error =
        scored.iter().filter_map(|r| r.l2_error).sum::<f64>() / scored.len().max(1) as f64;

    let spectrum = igo::embedding_spectrum(&corrupted_phi)?;
    let flatness = stats::spectrum_flatness(&spectrum, height * width)?.flatness;

    let mut outlier_axes = Vec::new();
    if dataset.config.mode == CorruptionMode::Replacement {
        let rank = crate::linalg::numerical_rank(&spectrum, n);
        let full_model = IgoModel::fit_with(
            &corrupted_phi,
            rank,
            igo::FitOptions {
                filter,
                center: false,
                parallelism,
            },
        )?;
        for i in dataset.corrupted_indices() {
            outlier_axes.push((i, full_model.outlier_axis(&corrupted_phi, i)?));
        }
    }

    Ok(CompareReport {
        rows,
        igo_mean_error,
        l2_mean_error,
        spectrum_flatness: flatness,
        outlier_axes,
    })
}

/// File-backed variant of [`compare_dataset`]: loads a synthesized manifest
/// (ground-truth copies required) and writes `compare.csv` to `out_dir`.
pub fn compare(
    manifest_path: impl AsRef<Path>,
    k: usize,
    filter: GradientFilterSpec,
    magnitude_floor: f64,
    parallelism: Parallelism,
    out_dir: impl AsRef<Path>,
) -> Result<CompareReport, CommandError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let corrupted = load_manifest_images(&manifest)?;
    let clean: Vec<GrayImage> = (0..manifest.len())
        .map(|i| {
            let path = manifest
                .clean_path(i)
                .ok_or(CommandError::MissingGroundTruth)?;
            Ok(io::load_image(path)?)
        })
        .collect::<Result<_, CommandError>>()?;
    let records: Vec<_> = manifest
        .images
        .iter()
        .map(|e| e.corruption.clone())
        .collect();
    let config = SynthConfig {
        n: manifest.len(),
        height: manifest.height,
        width: manifest.width,
        mode: manifest.mode,
        seed: manifest.seed,
        ..SynthConfig::default()
    };
    let dataset = SynthDataset {
        clean,
        corrupted,
        records,
        config,
    };
    let report = compare_dataset(&dataset, k, filter, magnitude_floor, parallelism)?;

    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let table = CsvTable {
        schema: "igo-pca compare csv v1",
        header: &[
            "index",
            "corruption",
            "metric_pixels",
            "igo_error",
            "l2_error",
            "l2_rmse",
        ],
        rows: report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.index.to_string(),
                    r.corruption.to_string(),
                    r.metric_pixels.to_string(),
                    fmt_opt(r.igo_error),
                    fmt_opt(r.l2_error),
                    fmt_opt(r.l2_rmse),
                ]
            })
            .collect(),
    };
    table.write(out_dir.join("compare.csv"))?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// kstest

#[derive(Debug, Clone)]
pub struct KsTrialRow {
    /// Seed for synthetic trials, or "i-j" for directory pairs.
    pub label: String,
    pub result: KsResult,
}

#[derive(Debug, Clone)]
pub struct KsSummary {
    pub rows: Vec<KsTrialRow>,
    pub acceptance_rate: f64,
    pub mean_p_value: f64,
}

fn summarize_ks(rows: Vec<KsTrialRow>) -> KsSummary {
    if rows.is_empty() {
        return KsSummary {
            rows,
            acceptance_rate: 0.0,
            mean_p_value: 0.0,
        };
    }
    let n = rows.len() as f64;
    let accepted = rows.iter().filter(|r| r.result.accepted).count() as f64;
    let p_sum: f64 = rows.iter().map(|r| r.result.p_value).sum();
    KsSummary {
        acceptance_rate: accepted / n,
        mean_p_value: p_sum / n,
        rows,
    }
}

/// Uniformity of orientation differences over seeded synthetic pairs.
///
/// Each trial draws two independent random orientation images and tests
/// their per-pixel differences for uniformity on `[0, 2*pi)`. Trial seeds
/// come from one master stream, so results do not depend on the execution
/// mode.
pub fn kstest_synthetic(
    trials: usize,
    height: usize,
    width: usize,
    seed: u64,
    alpha: f64,
    parallelism: Parallelism,
) -> Result<KsSummary, CommandError> {
    let mut master = SplitMix64::new(seed);
    let trial_seeds: Vec<(u64, u64)> = (0..trials)
        .map(|_| (master.next_u64(), master.next_u64()))
        .collect();
    let run = |&(sa, sb): &(u64, u64)| -> Result<KsTrialRow, CommandError> {
        let a = random_orientation_image(height, width, sa);
        let b = random_orientation_image(height, width, sb);
        let result = stats::dissimilarity_test(&a, &b, alpha)?;
        Ok(KsTrialRow {
            label: format!("{sa}"),
            result,
        })
    };
    let rows: Result<Vec<_>, _> = match parallelism {
        Parallelism::Serial => trial_seeds.iter().map(run).collect(),
        Parallelism::Rayon => trial_seeds.par_iter().map(run).collect(),
    };
    Ok(summarize_ks(rows?))
}

/// Uniformity of orientation differences across the image pairs of a
/// directory (all unordered pairs, optionally capped).
pub fn kstest_directory(
    dir: impl AsRef<Path>,
    cap: Option<usize>,
    filter: GradientFilterSpec,
    magnitude_floor: f64,
    alpha: f64,
) -> Result<KsSummary, CommandError> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("png")
            )
        })
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(CommandError::NotEnoughImages {
            needed: 2,
            got: paths.len(),
        });
    }
    let orientations: Vec<OrientationImage> = paths
        .iter()
        .map(|p| {
            let img = io::load_image(p)?;
            Ok(compute_orientation(&img, filter, magnitude_floor)?)
        })
        .collect::<Result<_, CommandError>>()?;
    let mut rows = Vec::new();
    'outer: for i in 0..orientations.len() {
        for j in (i + 1)..orientations.len() {
            if let Some(cap) = cap {
                if rows.len() >= cap {
                    break 'outer;
                }
            }
            let result = stats::dissimilarity_test(&orientations[i], &orientations[j], alpha)?;
            rows.push(KsTrialRow {
                label: format!("{i}-{j}"),
                result,
            });
        }
    }
    Ok(summarize_ks(rows))
}

/// Writes KS trial rows as CSV.
pub fn write_ks_csv(summary: &KsSummary, path: impl AsRef<Path>) -> Result<(), CommandError> {
    let table = CsvTable {
        schema: "igo-pca kstest csv v1",
        header: &["seed", "n", "d", "p_value", "accepted"],
        rows: summary
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    r.result.n.to_string(),
                    format!("{}", r.result.statistic),
                    format!("{}", r.result.p_value),
                    if r.result.accepted { "1" } else { "0" }.to_string(),
                ]
            })
            .collect(),
    };
    table.write(path)
}

// ---------------------------------------------------------------------------
// spectrum

#[derive(Debug, Clone)]
pub struct SpectrumOutcome {
    /// Raw eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues divided by the pixel count.
    pub normalized: Vec<f64>,
    pub flatness: f64,
}

/// Full embedding spectrum of a set of orientation images.
pub fn spectrum_of(images: &[OrientationImage]) -> Result<SpectrumOutcome, CommandError> {
    let eigenvalues = igo::embedding_spectrum(images)?;
    let p = images[0].pixel_count();
    let report = stats::spectrum_flatness(&eigenvalues, p)?;
    Ok(SpectrumOutcome {
        eigenvalues,
        normalized: report.normalized,
        flatness: report.flatness,
    })
}

/// Spectrum of a manifest's images, written as CSV.
pub fn spectrum(
    manifest_path: impl AsRef<Path>,
    filter: GradientFilterSpec,
    magnitude_floor: f64,
    parallelism: Parallelism,
    out: impl AsRef<Path>,
) -> Result<SpectrumOutcome, CommandError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let images = load_manifest_images(&manifest)?;
    let orientations = orientations_of(&images, filter, magnitude_floor, parallelism)?;
    let outcome = spectrum_of(&orientations)?;
    write_spectrum_csv(&outcome, out)?;
    Ok(outcome)
}

/// Spectrum of seeded random orientation images, written as CSV.
pub fn spectrum_synthetic(
    n: usize,
    height: usize,
    width: usize,
    seed: u64,
    out: impl AsRef<Path>,
) -> Result<SpectrumOutcome, CommandError> {
    let mut master = SplitMix64::new(seed);
    let images: Vec<OrientationImage> = (0..n)
        .map(|_| random_orientation_image(height, width, master.next_u64()))
        .collect();
    let outcome = spectrum_of(&images)?;
    write_spectrum_csv(&outcome, out)?;
    Ok(outcome)
}

fn write_spectrum_csv(
    outcome: &SpectrumOutcome,
    path: impl AsRef<Path>,
) -> Result<(), CommandError> {
    let table = CsvTable {
        schema: "igo-pca spectrum csv v1",
        header: &["index", "eigenvalue", "normalized"],
        rows: outcome
            .eigenvalues
            .iter()
            .zip(&outcome.normalized)
            .enumerate()
            .map(|(i, (&l, &nl))| vec![i.to_string(), format!("{l}"), format!("{nl}")])
            .collect(),
    };
    table.write(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tempdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn small_synth(dir: &Path, mode: CorruptionMode) -> PathBuf {
        let config = SynthConfig {
            n: 8,
            height: 24,
            width: 24,
            rank: 2,
            mode,
            fraction: 0.25,
            patch: 9,
            seed: 11,
        };
        synth(config, dir).unwrap()
    }

    #[test]
    fn synth_writes_images_and_manifest() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::Occlusion);
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.len(), 8);
        assert_eq!(
            manifest
                .images
                .iter()
                .filter(|e| e.corruption.is_corrupted())
                .count(),
            2
        );
        for i in 0..manifest.len() {
            assert!(manifest.image_path(i).is_file());
            assert!(manifest.clean_path(i).unwrap().is_file());
        }
    }

    #[test]
    fn synth_same_seed_same_bytes() {
        let dir_a = tempdir();
        let dir_b = tempdir();
        let ma = small_synth(dir_a.path(), CorruptionMode::Occlusion);
        let mb = small_synth(dir_b.path(), CorruptionMode::Occlusion);
        let a = std::fs::read(DatasetManifest::load(&ma).unwrap().image_path(3)).unwrap();
        let b = std::fs::read(DatasetManifest::load(&mb).unwrap().image_path(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_and_reconstruct_round_trip_through_files() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::None);
        let model_path = dir.path().join("model.igo");
        let settings = FitSettings {
            k: 3,
            ..FitSettings::default()
        };
        let model = fit(&manifest_path, settings, &model_path, None).unwrap();
        match &model {
            Model::Igo(m) => assert_eq!(m.components(), 3),
            _ => panic!("expected igo model"),
        }
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let images: Vec<PathBuf> = (0..3).map(|i| manifest.image_path(i)).collect();
        let out = dir.path().join("recon");
        let rows = reconstruct(&model_path, &images, &out, DEFAULT_MAGNITUDE_FLOOR).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.out_path.is_file());
            assert!(row.d2_per_pixel.is_finite());
        }
        assert!(out.join("reconstruction.csv").is_file());
    }

    #[test]
    fn random_query_error_sits_at_the_uniform_baseline() {
        // A uniform-random orientation image shares nothing with a small-k
        // model; the residual differences are uniform, so the expected
        // per-pixel error is E[1 - cos U] = 1.
        let images: Vec<_> = (0..6)
            .map(|s| random_orientation_image(50, 50, 4000 + s))
            .collect();
        let model = IgoModel::fit(&images, 2).unwrap();
        let mut mean = 0.0;
        let runs = 20;
        for s in 0..runs {
            let query = random_orientation_image(50, 50, 5000 + s);
            let rebuilt = model.reconstruct(&query).unwrap();
            mean += crate::orientation::cosine_distance(&query, &rebuilt).unwrap() / 2500.0;
        }
        mean /= runs as f64;
        assert!((0.9..=1.1).contains(&mean), "mean d2/p {mean}");
    }

    #[test]
    fn fit_l2_and_reconstruct_writes_pgm() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::None);
        let model_path = dir.path().join("model.l2");
        let settings = FitSettings {
            method: Method::L2,
            k: 2,
            ..FitSettings::default()
        };
        fit(&manifest_path, settings, &model_path, None).unwrap();
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        let out = dir.path().join("recon");
        let rows = reconstruct(
            &model_path,
            &[manifest.image_path(0)],
            &out,
            DEFAULT_MAGNITUDE_FLOOR,
        )
        .unwrap();
        assert!(rows[0].out_path.extension().unwrap() == "pgm");
    }

    #[test]
    fn fit_emits_component_images_on_request() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::None);
        let comp_dir = dir.path().join("components");
        let settings = FitSettings {
            k: 3,
            ..FitSettings::default()
        };
        fit(
            &manifest_path,
            settings,
            dir.path().join("m.igo"),
            Some(&comp_dir),
        )
        .unwrap();
        for j in 0..3 {
            assert!(comp_dir.join(format!("component_{j:02}.pgm")).is_file());
            assert!(comp_dir.join(format!("component_{j:02}.ori")).is_file());
        }
        let l2 = FitSettings {
            method: Method::L2,
            k: 2,
            ..FitSettings::default()
        };
        let l2_dir = dir.path().join("l2_components");
        fit(&manifest_path, l2, dir.path().join("m.l2"), Some(&l2_dir)).unwrap();
        assert!(l2_dir.join("component_01.pgm").is_file());
        assert!(!l2_dir.join("component_01.ori").exists());
    }

    #[test]
    fn fit_with_excessive_k_reports_rank() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::None);
        let settings = FitSettings {
            method: Method::L2,
            k: 8,
            ..FitSettings::default()
        };
        let err = fit(&manifest_path, settings, dir.path().join("m"), None).unwrap_err();
        assert_eq!(err.class(), "rank");
    }

    #[test]
    fn compare_produces_rows_and_csv() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::Occlusion);
        let out = dir.path().join("cmp");
        let report = compare(
            &manifest_path,
            2,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
            Parallelism::Serial,
            &out,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 8);
        assert!(report.igo_mean_error.is_finite());
        assert!(report.l2_mean_error.is_finite());
        for row in &report.rows {
            if let Some(e) = row.igo_error {
                assert!((0.0..=2.0).contains(&e));
            }
            if let Some(e) = row.l2_error {
                assert!((0.0..=2.0).contains(&e));
            }
        }
        assert!(out.join("compare.csv").is_file());
    }

    #[test]
    fn compare_without_ground_truth_is_an_error() {
        let dir = tempdir();
        let manifest_path = small_synth(dir.path(), CorruptionMode::None);
        let mut manifest = DatasetManifest::load(&manifest_path).unwrap();
        for entry in &mut manifest.images {
            entry.clean_path = None;
        }
        manifest.save(&manifest_path).unwrap();
        let err = compare(
            &manifest_path,
            2,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
            Parallelism::Serial,
            dir.path().join("cmp"),
        )
        .unwrap_err();
        assert_eq!(err.class(), "manifest");
    }

    #[test]
    fn replacement_compare_reports_outlier_axes() {
        let dir = tempdir();
        let config = SynthConfig {
            n: 10,
            height: 32,
            width: 32,
            rank: 2,
            mode: CorruptionMode::Replacement,
            fraction: 0.2,
            patch: 9,
            seed: 5,
        };
        let manifest_path = synth(config, dir.path()).unwrap();
        let report = compare(
            &manifest_path,
            2,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
            Parallelism::Serial,
            dir.path().join("cmp"),
        )
        .unwrap();
        assert_eq!(report.outlier_axes.len(), 2);
        for (_, axis) in &report.outlier_axes {
            assert!(axis.alignment > 0.5);
        }
    }

    #[test]
    fn synthetic_kstest_accepts_dissimilar_pairs() {
        let summary = kstest_synthetic(50, 40, 40, 99, 0.01, Parallelism::Serial).unwrap();
        assert_eq!(summary.rows.len(), 50);
        assert!(summary.acceptance_rate >= 0.95);
        let parallel = kstest_synthetic(50, 40, 40, 99, 0.01, Parallelism::Rayon).unwrap();
        assert_eq!(summary.acceptance_rate, parallel.acceptance_rate);
        for (a, b) in summary.rows.iter().zip(&parallel.rows) {
            assert_eq!(a.result.statistic.to_bits(), b.result.statistic.to_bits());
        }
    }

    #[test]
    fn zero_trials_gives_empty_csv_with_header() {
        let dir = tempdir();
        let summary = kstest_synthetic(0, 10, 10, 1, 0.01, Parallelism::Serial).unwrap();
        let path = dir.path().join("ks.csv");
        write_ks_csv(&summary, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], "seed,n,d,p_value,accepted");
    }

    #[test]
    fn directory_kstest_rejects_identical_pair() {
        let dir = tempdir();
        let config = SynthConfig {
            n: 1,
            height: 32,
            width: 32,
            rank: 2,
            mode: CorruptionMode::None,
            fraction: 0.0,
            patch: 5,
            seed: 3,
        };
        let manifest_path = synth(config, dir.path()).unwrap();
        let manifest = DatasetManifest::load(&manifest_path).unwrap();
        // duplicate the single image so the directory holds an identical pair
        let img_dir = dir.path().join("pair");
        std::fs::create_dir_all(&img_dir).unwrap();
        std::fs::copy(manifest.image_path(0), img_dir.join("a.pgm")).unwrap();
        std::fs::copy(manifest.image_path(0), img_dir.join("b.pgm")).unwrap();
        let summary = kstest_directory(
            &img_dir,
            None,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
            0.01,
        )
        .unwrap();
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.acceptance_rate, 0.0);
    }

    #[test]
    fn directory_kstest_needs_two_images() {
        let dir = tempdir();
        let err = kstest_directory(
            dir.path(),
            None,
            GradientFilterSpec::CentralDifference,
            DEFAULT_MAGNITUDE_FLOOR,
            0.01,
        )
        .unwrap_err();
        assert_eq!(err.class(), "usage");
    }

    #[test]
    fn spectrum_of_coherent_dataset_is_spiked() {
        let dir = tempdir();
        let img = random_orientation_image(20, 20, 8);
        let images = vec![img; 5];
        let outcome = spectrum_of(&images).unwrap();
        assert_eq!(outcome.eigenvalues.len(), 5);
        assert!((outcome.normalized[0] - 5.0).abs() <= 1e-9);
        for &l in &outcome.normalized[1..] {
            assert!(l.abs() <= 1e-9);
        }
        let path = dir.path().join("spectrum.csv");
        write_spectrum_csv(&outcome, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2 + 5);
    }

    #[test]
    fn synthetic_spectrum_csv_has_n_rows() {
        let dir = tempdir();
        let path = dir.path().join("spectrum.csv");
        let outcome = spectrum_synthetic(6, 30, 30, 77, &path).unwrap();
        assert_eq!(outcome.eigenvalues.len(), 6);
        assert!(outcome.flatness <= 0.5);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 8);
    }
}
