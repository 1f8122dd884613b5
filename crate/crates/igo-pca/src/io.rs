//! File formats: grayscale image ingestion and binary persistence.
//!
//! Images load from 8/16-bit PGM (both the ASCII `P2` and binary `P5`
//! encodings) or grayscale PNG, with intensities scaled to `[0, 1]` by the
//! format's maximum sample value. PGM is the canonical fixture format since
//! it can be written by hand in tests; JPEG stays unsupported because lossy
//! artifacts corrupt gradients.
//!
//! Fitted models and orientation images persist in a small binary container:
//! an 8-byte magic, a little-endian u32 version, a UTF-8 `key=value`
//! metadata block and a payload of little-endian f64 values (complex entries
//! as real/imaginary pairs, matrices column-major). Round trips are
//! bit-exact. All writes go through a temporary file in the target directory
//! followed by a rename, so a crashed run never leaves a readable
//! half-written file.

use crate::baseline::L2Model;
use crate::igo::IgoModel;
use crate::linalg::{ComplexMatrix, PrincipalSubspace};
use crate::orientation::{GradientFilterSpec, GrayImage, OrientationError, OrientationImage};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

const MODEL_MAGIC: &[u8; 8] = b"IGOMODEL";
const ORIENTATION_MAGIC: &[u8; 8] = b"IGOANGLE";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("truncated file {path}")]
    Truncated { path: PathBuf },
    #[error("zero image dimensions in {path}")]
    ZeroDimensions { path: PathBuf },
    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("bad magic in {path}")]
    BadMagic { path: PathBuf },
    #[error("version mismatch in {path}: found {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("payload length mismatch in {path}: expected {expected} bytes, got {got}")]
    PayloadLength {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {path}")]
    NonFinite { path: PathBuf },
    #[error("invalid image in {path}: {source}")]
    InvalidImage {
        path: PathBuf,
        #[source]
        source: OrientationError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoFormatError + '_ {
    move |source| IoFormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a grayscale image, sniffing PGM or PNG from the file contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, IoFormatError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    match bytes.get(..2) {
        Some(b"P2") | Some(b"P5") => parse_pgm(&bytes, path),
        Some([0x89, b'P']) => parse_png(&bytes, path),
        _ => Err(IoFormatError::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "expected PGM (P2/P5) or PNG".into(),
        }),
    }
}

fn parse_png(bytes: &[u8], path: &Path) -> Result<GrayImage, IoFormatError> {
    let decoded =
        image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| {
            IoFormatError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("png decode failed: {e}"),
            }
        })?;
    let (data, height, width) = match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let data = img
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 255.0)
                .collect();
            (data, h as usize, w as usize)
        }
        image::DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let data = img
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect();
            (data, h as usize, w as usize)
        }
        other => {
            return Err(IoFormatError::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: format!("png color type {:?} is not grayscale", other.color()),
            })
        }
    };
    if height == 0 || width == 0 {
        return Err(IoFormatError::ZeroDimensions {
            path: path.to_path_buf(),
        });
    }
    GrayImage::new(height, width, data).map_err(|source| IoFormatError::InvalidImage {
        path: path.to_path_buf(),
        source,
    })
}

/// Pulls the next whitespace-separated token, skipping `#` comments.
fn next_pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

fn parse_pgm_number(token: &[u8], path: &Path) -> Result<usize, IoFormatError> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!(
                "expected a number, got {:?}",
                String::from_utf8_lossy(token)
            ),
        })
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage, IoFormatError> {
    let binary = bytes[1] == b'5';
    let mut pos = 2usize;
    let mut header = [0usize; 3];
    for slot in &mut header {
        let token = next_pgm_token(bytes, &mut pos).ok_or_else(|| IoFormatError::Truncated {
            path: path.to_path_buf(),
        })?;
        *slot = parse_pgm_number(token, path)?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(IoFormatError::ZeroDimensions {
            path: path.to_path_buf(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let count = width * height;
    let scale = 1.0 / maxval as f64;
    let mut data = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let wide = maxval > 255;
        let sample_len = if wide { 2 } else { 1 };
        let raster =
            bytes
                .get(pos..pos + count * sample_len)
                .ok_or_else(|| IoFormatError::Truncated {
                    path: path.to_path_buf(),
                })?;
        for chunk in raster.chunks_exact(sample_len) {
            let v = if wide {
                u16::from_be_bytes([chunk[0], chunk[1]]) as usize
            } else {
                chunk[0] as usize
            };
            data.push(v as f64 * scale);
        }
    } else {
        for _ in 0..count {
            let token =
                next_pgm_token(bytes, &mut pos).ok_or_else(|| IoFormatError::Truncated {
                    path: path.to_path_buf(),
                })?;
            data.push(parse_pgm_number(token, path)? as f64 * scale);
        }
    }
    GrayImage::new(height, width, data).map_err(|source| IoFormatError::InvalidImage {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a 16-bit binary PGM, quantizing intensities from `[0, 1]`.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), IoFormatError> {
    let path = path.as_ref();
    let mut bytes = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.as_slice() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    write_atomic(path, &bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoFormatError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoFormatError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// A persisted model of either kind.
#[derive(Debug, Clone)]
pub enum Model {
    Igo(IgoModel),
    L2(L2Model),
}

impl From<IgoModel> for Model {
    fn from(m: IgoModel) -> Self {
        Model::Igo(m)
    }
}

impl From<L2Model> for Model {
    fn from(m: L2Model) -> Self {
        Model::L2(m)
    }
}

struct Container {
    meta: BTreeMap<String, String>,
    payload: Vec<f64>,
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn filter_meta(meta: &mut BTreeMap<String, String>, filter: GradientFilterSpec) {
    match filter {
        GradientFilterSpec::CentralDifference => {
            meta.insert("filter".into(), "central-difference".into());
        }
        GradientFilterSpec::GaussianDerivative { sigma } => {
            meta.insert("filter".into(), "gaussian-derivative".into());
            meta.insert("sigma".into(), format!("{sigma}"));
        }
    }
}

fn filter_from_meta(
    meta: &BTreeMap<String, String>,
    path: &Path,
) -> Result<GradientFilterSpec, IoFormatError> {
    match meta.get("filter").map(String::as_str) {
        Some("central-difference") => Ok(GradientFilterSpec::CentralDifference),
        Some("gaussian-derivative") => {
            let sigma = meta_f64(meta, "sigma", path)?;
            GradientFilterSpec::gaussian_derivative(sigma).map_err(|source| {
                IoFormatError::InvalidImage {
                    path: path.to_path_buf(),
                    source,
                }
            })
        }
        other => Err(IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("unknown filter {other:?}"),
        }),
    }
}

fn meta_value<'a>(
    meta: &'a BTreeMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<&'a str, IoFormatError> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("missing key {key}"),
        })
}

fn meta_usize(
    meta: &BTreeMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<usize, IoFormatError> {
    meta_value(meta, key, path)?
        .parse()
        .map_err(|_| IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("key {key} is not an integer"),
        })
}

fn meta_f64(meta: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<f64, IoFormatError> {
    meta_value(meta, key, path)?
        .parse()
        .map_err(|_| IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("key {key} is not a number"),
        })
}

fn write_container(
    path: &Path,
    magic: &[u8; 8],
    meta: &BTreeMap<String, String>,
    payload: &[f64],
) -> Result<(), IoFormatError> {
    let mut meta_text = String::new();
    for (k, v) in meta {
        meta_text.push_str(k);
        meta_text.push('=');
        meta_text.push_str(v);
        meta_text.push('\n');
    }
    let mut bytes = Vec::with_capacity(16 + meta_text.len() + payload.len() * 8);
    bytes.extend_from_slice(magic);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(meta_text.len() as u32).to_le_bytes());
    bytes.extend_from_slice(meta_text.as_bytes());
    for &v in payload {
        push_f64(&mut bytes, v);
    }
    write_atomic(path, &bytes)
}

fn read_container(path: &Path, magic: &[u8; 8]) -> Result<Container, IoFormatError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    if bytes.len() < 16 {
        return Err(IoFormatError::Truncated {
            path: path.to_path_buf(),
        });
    }
    if &bytes[..8] != magic {
        return Err(IoFormatError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(IoFormatError::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let meta_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let meta_end = 16 + meta_len;
    if bytes.len() < meta_end {
        return Err(IoFormatError::Truncated {
            path: path.to_path_buf(),
        });
    }
    let meta_text =
        std::str::from_utf8(&bytes[16..meta_end]).map_err(|_| IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: "metadata is not UTF-8".into(),
        })?;
    let mut meta = BTreeMap::new();
    for line in meta_text.lines() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| IoFormatError::MalformedHeader {
                path: path.to_path_buf(),
                detail: format!("metadata line without '=': {line}"),
            })?;
        meta.insert(k.to_string(), v.to_string());
    }
    let payload_bytes = &bytes[meta_end..];
    if payload_bytes.len() % 8 != 0 {
        return Err(IoFormatError::PayloadLength {
            path: path.to_path_buf(),
            expected: payload_bytes.len() / 8 * 8 + 8,
            got: payload_bytes.len(),
        });
    }
    let payload: Vec<f64> = payload_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Container { meta, payload })
}

/// Persists a fitted model. The round trip through [`load_model`] is
/// bit-exact.
pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), IoFormatError> {
    let path = path.as_ref();
    let mut meta = BTreeMap::new();
    let mut payload: Vec<f64> = Vec::new();
    match model {
        Model::Igo(m) => {
            meta.insert("kind".into(), "igo".into());
            meta.insert("height".into(), m.height().to_string());
            meta.insert("width".into(), m.width().to_string());
            meta.insert("k".into(), m.components().to_string());
            meta.insert(
                "centered".into(),
                if m.mean().is_some() { "1" } else { "0" }.into(),
            );
            filter_meta(&mut meta, m.filter());
            payload.extend_from_slice(m.eigenvalues());
            let basis = m.subspace().basis();
            for j in 0..basis.cols() {
                for i in 0..basis.rows() {
                    let v = basis.get(i, j);
                    payload.push(v.re);
                    payload.push(v.im);
                }
            }
            if let Some(mean) = m.mean() {
                for v in mean {
                    payload.push(v.re);
                    payload.push(v.im);
                }
            }
        }
        Model::L2(m) => {
            meta.insert("kind".into(), "l2".into());
            meta.insert("height".into(), m.height().to_string());
            meta.insert("width".into(), m.width().to_string());
            meta.insert("k".into(), m.components().to_string());
            payload.extend_from_slice(m.eigenvalues());
            payload.extend_from_slice(m.mean());
            payload.extend_from_slice(m.basis_raw());
        }
    }
    write_container(path, MODEL_MAGIC, &meta, &payload)
}

/// Loads a model persisted by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<Model, IoFormatError> {
    let path = path.as_ref();
    let Container { meta, payload } = read_container(path, MODEL_MAGIC)?;
    if payload.iter().any(|v| !v.is_finite()) {
        return Err(IoFormatError::NonFinite {
            path: path.to_path_buf(),
        });
    }
    let height = meta_usize(&meta, "height", path)?;
    let width = meta_usize(&meta, "width", path)?;
    let k = meta_usize(&meta, "k", path)?;
    let p = height * width;
    let expect_len = |expected: usize| {
        if payload.len() != expected {
            Err(IoFormatError::PayloadLength {
                path: path.to_path_buf(),
                expected: expected * 8,
                got: payload.len() * 8,
            })
        } else {
            Ok(())
        }
    };
    match meta_value(&meta, "kind", path)? {
        "igo" => {
            let centered = meta_value(&meta, "centered", path)? == "1";
            let mean_len = if centered { 2 * p } else { 0 };
            expect_len(k + 2 * p * k + mean_len)?;
            let filter = filter_from_meta(&meta, path)?;
            let eigenvalues = payload[..k].to_vec();
            let mut basis = ComplexMatrix::zeros(p, k);
            let mut cursor = k;
            for j in 0..k {
                for i in 0..p {
                    basis.set(i, j, Complex64::new(payload[cursor], payload[cursor + 1]));
                    cursor += 2;
                }
            }
            let mean = centered.then(|| {
                let mut mean = Vec::with_capacity(p);
                for _ in 0..p {
                    mean.push(Complex64::new(payload[cursor], payload[cursor + 1]));
                    cursor += 2;
                }
                mean
            });
            let subspace = PrincipalSubspace::from_parts(basis, eigenvalues);
            Ok(Model::Igo(IgoModel::from_parts(
                subspace, filter, height, width, mean,
            )))
        }
        "l2" => {
            expect_len(k + p + p * k)?;
            let eigenvalues = payload[..k].to_vec();
            let mean = payload[k..k + p].to_vec();
            let basis = payload[k + p..].to_vec();
            Ok(Model::L2(L2Model::from_parts(
                mean,
                basis,
                eigenvalues,
                height,
                width,
                k,
            )))
        }
        other => Err(IoFormatError::MalformedHeader {
            path: path.to_path_buf(),
            detail: format!("unknown model kind {other}"),
        }),
    }
}

/// Persists an orientation image with full f64 angle precision plus the
/// validity mask. PNG would quantize the angles, so orientations get their
/// own container.
pub fn save_orientation(
    phi: &OrientationImage,
    path: impl AsRef<Path>,
) -> Result<(), IoFormatError> {
    let path = path.as_ref();
    let mut meta = BTreeMap::new();
    meta.insert("height".into(), phi.height().to_string());
    meta.insert("width".into(), phi.width().to_string());
    let mut payload: Vec<f64> = phi.angles().to_vec();
    // Mask bits ride along as packed bytes, least significant bit first,
    // encoded into f64 lanes to keep the container uniform.
    let mask = phi.valid_mask();
    let mut packed = vec![0u8; mask.len().div_ceil(8)];
    for (k, &valid) in mask.iter().enumerate() {
        if valid {
            packed[k / 8] |= 1 << (k % 8);
        }
    }
    for chunk in packed.chunks(8) {
        let mut lane = [0u8; 8];
        lane[..chunk.len()].copy_from_slice(chunk);
        payload.push(f64::from_le_bytes(lane));
    }
    write_container(path, ORIENTATION_MAGIC, &meta, &payload)
}

/// Loads an orientation image written by [`save_orientation`].
pub fn load_orientation(path: impl AsRef<Path>) -> Result<OrientationImage, IoFormatError> {
    let path = path.as_ref();
    let Container { meta, payload } = read_container(path, ORIENTATION_MAGIC)?;
    let height = meta_usize(&meta, "height", path)?;
    let width = meta_usize(&meta, "width", path)?;
    let p = height * width;
    let mask_lanes = p.div_ceil(8).div_ceil(8);
    if payload.len() != p + mask_lanes {
        return Err(IoFormatError::PayloadLength {
            path: path.to_path_buf(),
            expected: (p + mask_lanes) * 8,
            got: payload.len() * 8,
        });
    }
    let angles = payload[..p].to_vec();
    if angles.iter().any(|v| !v.is_finite()) {
        return Err(IoFormatError::NonFinite {
            path: path.to_path_buf(),
        });
    }
    let mut packed = Vec::with_capacity(mask_lanes * 8);
    for &lane in &payload[p..] {
        packed.extend_from_slice(&lane.to_le_bytes());
    }
    let valid: Vec<bool> = (0..p)
        .map(|k| packed[k / 8] & (1 << (k % 8)) != 0)
        .collect();
    OrientationImage::new(height, width, angles, valid).map_err(|source| {
        IoFormatError::InvalidImage {
            path: path.to_path_buf(),
            source,
        }
    })
}
