//! Thin command-line front end; the logic lives in `igo_pca::commands`.

use clap::{Args, Parser, Subcommand};
use igo_pca::commands::{self, CommandError, FitSettings, Method};
use igo_pca::io::Model;
use igo_pca::linalg::Parallelism;
use igo_pca::orientation::{GradientFilterSpec, DEFAULT_MAGNITUDE_FLOOR};
use igo_pca::synth::{CorruptionMode, SynthConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "igo-pca",
    about = "Robust subspace estimation via PCA of image gradient orientations",
    version
)]
struct Cli {
    /// TOML file with default flag values (command line wins).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Force the serial reference path (bit-reproducible with --seed).
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic low-rank dataset with optional corruptions.
    Synth(SynthArgs),
    /// Fit an orientation or intensity PCA model over a manifest.
    Fit(FitArgs),
    /// Reconstruct images through a saved model.
    Reconstruct(ReconstructArgs),
    /// Fit both models on corrupted data and score them against the
    /// ground truth.
    Compare(CompareArgs),
    /// Kolmogorov-Smirnov uniformity of orientation differences.
    Kstest(KstestArgs),
    /// Eigen-spectrum of the embedding Gram matrix.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Number of smooth basis images in the clean signal.
    #[arg(long)]
    rank: Option<usize>,
    /// none | occlusion | replacement
    #[arg(long)]
    mode: Option<CorruptionMode>,
    /// Fraction of images to corrupt.
    #[arg(long)]
    fraction: Option<f64>,
    /// Occlusion patch side length in pixels.
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// igo | l2
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    /// central-difference | gaussian-derivative
    #[arg(long)]
    filter: Option<String>,
    /// Gaussian-derivative standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Gradient magnitude below which a pixel has no orientation.
    #[arg(long)]
    magnitude_floor: Option<f64>,
    /// Subtract the complex sample mean before the orientation fit.
    #[arg(long)]
    center: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write each basis component as an image into this directory.
    #[arg(long)]
    components_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    magnitude_floor: Option<f64>,
    /// Image files to reconstruct.
    #[arg(required = true)]
    images: Vec<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    magnitude_floor: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KstestArgs {
    /// Test all image pairs of this directory instead of synthetic trials.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Number of synthetic trials (or a cap on directory pairs).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    magnitude_floor: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Use the images of this manifest; otherwise synthesize random
    /// orientation images.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    magnitude_floor: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

/// Defaults loaded from an optional TOML config file. Resolution order is
/// command line, then config file, then the built-in default.
struct Defaults {
    table: toml::Table,
}

impl Defaults {
    fn load(path: Option<&PathBuf>) -> Result<Self, CommandError> {
        let table = match path {
            None => toml::Table::new(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CommandError::Io {
                    path: path.clone(),
                    source,
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?
            }
        };
        Ok(Self { table })
    }

    fn resolve<T: FromToml>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CommandError> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.table.get(key) {
            None => Ok(default),
            Some(value) => T::from_toml(value).ok_or_else(|| {
                CommandError::Config(format!("config key {key} has the wrong type"))
            }),
        }
    }
}

trait FromToml: Sized {
    fn from_toml(value: &toml::Value) -> Option<Self>;
}

impl FromToml for usize {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value.as_integer().and_then(|v| usize::try_from(v).ok())
    }
}

impl FromToml for u64 {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value.as_integer().and_then(|v| u64::try_from(v).ok())
    }
}

impl FromToml for f64 {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value
            .as_float()
            .or_else(|| value.as_integer().map(|v| v as f64))
    }
}

impl FromToml for String {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value.as_str().map(str::to_owned)
    }
}

impl FromToml for CorruptionMode {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value.as_str().and_then(|s| s.parse().ok())
    }
}

impl FromToml for Method {
    fn from_toml(value: &toml::Value) -> Option<Self> {
        value.as_str().and_then(|s| s.parse().ok())
    }
}

fn resolve_filter(
    defaults: &Defaults,
    filter: Option<String>,
    sigma: Option<f64>,
) -> Result<GradientFilterSpec, CommandError> {
    let name = defaults.resolve(filter, "filter", "central-difference".to_string())?;
    match name.as_str() {
        "central-difference" => Ok(GradientFilterSpec::CentralDifference),
        "gaussian-derivative" => {
            let sigma = defaults.resolve(sigma, "sigma", 1.0)?;
            Ok(GradientFilterSpec::gaussian_derivative(sigma)?)
        }
        other => Err(CommandError::Config(format!(
            "unknown filter {other}, expected central-difference or gaussian-derivative"
        ))),
    }
}

fn verbose() -> bool {
    std::env::var_os("IGO_PCA_VERBOSE").is_some_and(|v| v != "0")
}

fn progress(msg: impl AsRef<str>) {
    if verbose() {
        eprintln!("igo-pca: {}", msg.as_ref());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CommandError> {
    let defaults = Defaults::load(cli.config.as_ref())?;
    let parallelism = if cli.serial {
        Parallelism::Serial
    } else {
        Parallelism::Rayon
    };

    match cli.command {
        Command::Synth(args) => {
            let config = SynthConfig {
                n: defaults.resolve(args.n, "n", 50)?,
                height: defaults.resolve(args.height, "height", 128)?,
                width: defaults.resolve(args.width, "width", 128)?,
                rank: defaults.resolve(args.rank, "rank", 3)?,
                mode: defaults.resolve(args.mode, "mode", CorruptionMode::None)?,
                fraction: defaults.resolve(args.fraction, "fraction", 0.2)?,
                patch: defaults.resolve(args.patch, "patch", 45)?,
                seed: defaults.resolve(args.seed, "seed", 42)?,
            };
            progress(format!(
                "synthesizing {} images into {}",
                config.n,
                args.out.display()
            ));
            let manifest = commands::synth(config, &args.out)?;
            println!(
                "wrote {} images and manifest {}",
                config.n,
                manifest.display()
            );
        }
        Command::Fit(args) => {
            let settings = FitSettings {
                method: defaults.resolve(args.method, "method", Method::Igo)?,
                k: defaults.resolve(args.k, "k", 5)?,
                filter: resolve_filter(&defaults, args.filter, args.sigma)?,
                magnitude_floor: defaults.resolve(
                    args.magnitude_floor,
                    "magnitude-floor",
                    DEFAULT_MAGNITUDE_FLOOR,
                )?,
                center: args.center,
                parallelism,
            };
            progress(format!("fitting on {}", args.manifest.display()));
            let model = commands::fit(
                &args.manifest,
                settings,
                &args.out,
                args.components_out.as_deref(),
            )?;
            let eigenvalues: Vec<String> = match &model {
                Model::Igo(m) => m.eigenvalues().iter().map(|v| format!("{v:.6}")).collect(),
                Model::L2(m) => m.eigenvalues().iter().map(|v| format!("{v:.6}")).collect(),
            };
            println!("eigenvalues: {}", eigenvalues.join(" "));
            println!("saved model to {}", args.out.display());
        }
        Command::Reconstruct(args) => {
            let floor = defaults.resolve(
                args.magnitude_floor,
                "magnitude-floor",
                DEFAULT_MAGNITUDE_FLOOR,
            )?;
            let rows = commands::reconstruct(&args.model, &args.images, &args.out, floor)?;
            for row in &rows {
                println!("{}: d2/p = {:.6e}", row.path.display(), row.d2_per_pixel);
            }
            println!(
                "wrote {} reconstructions to {}",
                rows.len(),
                args.out.display()
            );
        }
        Command::Compare(args) => {
            let k = defaults.resolve(args.k, "k", 5)?;
            let filter = resolve_filter(&defaults, args.filter, args.sigma)?;
            let floor = defaults.resolve(
                args.magnitude_floor,
                "magnitude-floor",
                DEFAULT_MAGNITUDE_FLOOR,
            )?;
            progress(format!("comparing methods on {}", args.manifest.display()));
            let report =
                commands::compare(&args.manifest, k, filter, floor, parallelism, &args.out)?;
            println!(
                "mean orientation error (clean regions): igo = {:.6}, l2 = {:.6}",
                report.igo_mean_error, report.l2_mean_error
            );
            println!(
                "embedding spectrum flatness: {:.4}",
                report.spectrum_flatness
            );
            for (index, axis) in &report.outlier_axes {
                println!(
                    "outlier axis for image {index}: component {} alignment {:.4}{}",
                    axis.component,
                    axis.alignment,
                    if axis.found { "" } else { " (below threshold)" }
                );
            }
            println!("wrote {}", args.out.join("compare.csv").display());
        }
        Command::Kstest(args) => {
            let alpha = defaults.resolve(args.alpha, "alpha", 0.01)?;
            let summary = match &args.dir {
                Some(dir) => {
                    let filter = resolve_filter(&defaults, args.filter, args.sigma)?;
                    let floor = defaults.resolve(
                        args.magnitude_floor,
                        "magnitude-floor",
                        DEFAULT_MAGNITUDE_FLOOR,
                    )?;
                    commands::kstest_directory(dir, args.trials, filter, floor, alpha)?
                }
                None => {
                    let trials = defaults.resolve(args.trials, "trials", 1000)?;
                    let height = defaults.resolve(args.height, "height", 100)?;
                    let width = defaults.resolve(args.width, "width", 100)?;
                    let seed = defaults.resolve(args.seed, "seed", 42)?;
                    progress(format!("running {trials} synthetic trials"));
                    commands::kstest_synthetic(trials, height, width, seed, alpha, parallelism)?
                }
            };
            commands::write_ks_csv(&summary, &args.out)?;
            println!(
                "pairs: {}  acceptance rate: {:.4}  mean p-value: {:.4}",
                summary.rows.len(),
                summary.acceptance_rate,
                summary.mean_p_value
            );
            println!("wrote {}", args.out.display());
        }
        Command::Spectrum(args) => {
            let outcome = match &args.manifest {
                Some(manifest) => {
                    let filter = resolve_filter(&defaults, args.filter, args.sigma)?;
                    let floor = defaults.resolve(
                        args.magnitude_floor,
                        "magnitude-floor",
                        DEFAULT_MAGNITUDE_FLOOR,
                    )?;
                    commands::spectrum(manifest, filter, floor, parallelism, &args.out)?
                }
                None => {
                    let n = defaults.resolve(args.n, "n", 20)?;
                    let height = defaults.resolve(args.height, "height", 200)?;
                    let width = defaults.resolve(args.width, "width", 200)?;
                    let seed = defaults.resolve(args.seed, "seed", 42)?;
                    commands::spectrum_synthetic(n, height, width, seed, &args.out)?
                }
            };
            println!("spectrum flatness: {:.4}", outcome.flatness);
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}
