//! Decoded raster assets keyed by identifier, plus style file loading.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use posterkit_core::render::{AssetSource, RenderSpec};
use posterkit_core::{Content, LayoutRecord, RgbaImage};

use crate::io::{self, IoError};

/// Read-only map from asset id to image. Ids are paths relative to `root`.
#[derive(Debug, Clone, Default)]
pub struct AssetStore {
    pub root: PathBuf,
    images: BTreeMap<String, RgbaImage>,
}

impl AssetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AssetStore {
            root: root.into(),
            images: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, image: RgbaImage) {
        self.images.insert(id.into(), image);
    }

    /// Decodes every asset the record references. Unreadable files are
    /// returned as errors alongside their ids and left out of the store.
    pub fn load_for(&mut self, record: &LayoutRecord) -> Vec<(String, IoError)> {
        let mut failures = Vec::new();
        for el in &record.elements {
            if let Content::Asset(id) = &el.content {
                if self.images.contains_key(id) {
                    continue;
                }
                match io::load_rgba(&self.path_of(id)) {
                    Ok(img) => {
                        self.images.insert(id.clone(), img);
                    }
                    Err(e) => failures.push((id.clone(), e)),
                }
            }
        }
        failures
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        let p = Path::new(id);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

impl AssetSource for AssetStore {
    fn asset(&self, id: &str) -> Option<&RgbaImage> {
        self.images.get(id)
    }
}

/// Style file in JSON; absent keys fall back to the built-in defaults.
pub fn load_render_spec(path: &Path) -> Result<RenderSpec, IoError> {
    serde_json::from_str(&io::read_text(path)?).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use posterkit_core::{Canvas, Element, NormBox};

    #[test]
    fn loads_referenced_assets_once() {
        let dir = tempfile::tempdir().unwrap();
        io::save_png(
            &dir.path().join("logo.png"),
            &RgbaImage::new(2, 2, [1, 2, 3, 255]),
        )
        .unwrap();
        let rec =
            LayoutRecord::new("r", Canvas::new(10, 10).unwrap(), "poster").with_elements(vec![
                Element::new("logo", NormBox::new(0.0, 0.0, 0.5, 0.5)).with_asset("logo.png"),
                Element::new("logo", NormBox::new(0.5, 0.5, 1.0, 1.0)).with_asset("missing.png"),
            ]);
        let mut store = AssetStore::new(dir.path());
        let failures = store.load_for(&rec);
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].0, "missing.png");
        assert!(store.asset("logo.png").is_some());
        assert!(store.asset("missing.png").is_none());
    }

    #[test]
    fn partial_style_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("style.json");
        io::write_atomic(&p, br#"{"styles":{"text":{"fill":[255,0,0,255]}}}"#).unwrap();
        let spec = load_render_spec(&p).unwrap();
        assert_eq!(spec.style("text").fill, [255, 0, 0, 255]);
        assert_eq!(spec.style("text").border_px, 1);
        assert_eq!(spec.fallback, RenderSpec::default().fallback);
    }
}
