//! File-level helpers: atomic writes, raster decoding and encoding, saliency
//! masks, layout files and embedding sets.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};
use posterkit_core::codec::{self, LayoutFragment};
use posterkit_core::metrics::content::{BackgroundImage, SaliencyMask};
use posterkit_core::metrics::similarity::EmbeddingSet;
use posterkit_core::RgbaImage;
use thiserror::Error;

/// Magic bytes of the binary embedding format.
pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl IoError {
    fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.flush().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn load_rgba(path: &Path) -> Result<RgbaImage, IoError> {
    let img = image::open(path)
        .map_err(|source| IoError::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgba8();
    let (w, h) = img.dimensions();
    RgbaImage::from_raw(w, h, img.into_raw()).ok_or_else(|| IoError::format(path, "bad buffer"))
}

/// PNG bytes with fixed encoder settings, so equal images give equal files.
pub fn encode_png(img: &RgbaImage) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(&img.data, img.width, img.height, ExtendedColorType::Rgba8)
        .expect("in-memory PNG encoding of a consistent buffer");
    out
}

pub fn save_png(path: &Path, img: &RgbaImage) -> Result<(), IoError> {
    write_atomic(path, &encode_png(img))
}

fn open_sized(path: &Path, size: Option<(u32, u32)>) -> Result<image::DynamicImage, IoError> {
    let img = image::open(path).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(match size {
        Some((w, h)) if (w, h) != (img.width(), img.height()) => {
            img.resize_exact(w, h, image::imageops::FilterType::Triangle)
        }
        _ => img,
    })
}

/// RGB background, resampled to `size` when given and different.
pub fn load_background(path: &Path, size: Option<(u32, u32)>) -> Result<BackgroundImage, IoError> {
    let img = open_sized(path, size)?.to_rgb8();
    let (w, h) = img.dimensions();
    BackgroundImage::new(w, h, img.into_raw()).map_err(|e| IoError::format(path, e.to_string()))
}

/// Any decodable raster collapsed to luma and scaled to `[0, 1]`,
/// resampled to `size` when given and different.
pub fn load_saliency(path: &Path, size: Option<(u32, u32)>) -> Result<SaliencyMask, IoError> {
    let img = open_sized(path, size)?.to_luma8();
    let (w, h) = img.dimensions();
    let values = img
        .into_raw()
        .into_iter()
        .map(|v| v as f32 / 255.0)
        .collect();
    SaliencyMask::new(w, h, values).map_err(|e| IoError::format(path, e.to_string()))
}

pub fn save_saliency(path: &Path, mask: &SaliencyMask) -> Result<(), IoError> {
    let gray: Vec<u8> = mask
        .values()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect();
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(&gray, mask.width, mask.height, ExtendedColorType::L8)
        .map_err(|source| IoError::Image {
            path: path.to_path_buf(),
            source,
        })?;
    write_atomic(path, &out)
}

/// A layout in wire format, e.g. a prediction file.
pub fn load_layout(path: &Path) -> Result<LayoutFragment, IoError> {
    codec::parse(&read_text(path)?).map_err(|e| IoError::format(path, e.to_string()))
}

/// Reads either the binary `EMB1` format (magic, u32 count, u32 dim, then
/// little-endian f32 rows) or a JSON array of equal-length number arrays.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet, IoError> {
    let bytes = read_bytes(path)?;
    let provenance = path.display().to_string();
    let vectors = if bytes.starts_with(EMBEDDING_MAGIC) {
        decode_embeddings(&bytes).map_err(|m| IoError::format(path, m))?
    } else {
        serde_json::from_slice::<Vec<Vec<f64>>>(&bytes)
            .map_err(|e| IoError::format(path, e.to_string()))?
    };
    EmbeddingSet::new(vectors, provenance).map_err(|e| IoError::format(path, e.to_string()))
}

fn decode_embeddings(bytes: &[u8]) -> Result<Vec<Vec<f64>>, String> {
    let word = |i: usize| -> Result<usize, String> {
        let b = bytes.get(i..i + 4).ok_or("truncated header")?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    };
    let (count, dim) = (word(4)?, word(8)?);
    let body = &bytes[12..];
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or("header overflows")?;
    if body.len() != expected {
        return Err(format!(
            "expected {expected} payload bytes for {count}x{dim}, found {}",
            body.len()
        ));
    }
    let floats: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(floats.chunks(dim.max(1)).map(<[f64]>::to_vec).collect())
}

pub fn encode_embeddings(vectors: &[Vec<f32>]) -> Vec<u8> {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(12 + vectors.len() * dim * 4);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in vectors {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = RgbaImage::new(7, 5, [10, 20, 30, 255]);
        img.put(3, 2, [255, 0, 0, 128]);
        let p = dir.path().join("a.png");
        save_png(&p, &img).unwrap();
        assert_eq!(load_rgba(&p).unwrap(), img);
        assert_eq!(encode_png(&img), encode_png(&img.clone()));
    }

    #[test]
    fn binary_and_json_embeddings_agree() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec![1.0f32, 2.5, -3.0], vec![0.5, 0.25, 8.0]];
        let bin = dir.path().join("e.emb");
        write_atomic(&bin, &encode_embeddings(&rows)).unwrap();
        let json = dir.path().join("e.json");
        write_atomic(&json, serde_json::to_string(&rows).unwrap().as_bytes()).unwrap();
        let a = load_embeddings(&bin).unwrap();
        let b = load_embeddings(&json).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        assert_eq!((a.len(), a.dim()), (2, 3));
    }

    #[test]
    fn truncated_embedding_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.emb");
        let mut bytes = encode_embeddings(&[vec![1.0, 2.0]]);
        bytes.pop();
        write_atomic(&p, &bytes).unwrap();
        assert!(matches!(load_embeddings(&p), Err(IoError::Format { .. })));
    }

    #[test]
    fn saliency_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mask = SaliencyMask::from_fn(4, 3, |x, _| if x < 2 { 1.0 } else { 0.0 });
        let p = dir.path().join("m.png");
        save_saliency(&p, &mask).unwrap();
        assert_eq!(load_saliency(&p, None).unwrap(), mask);
    }
}
