//! Poster rasterization and patch transplanting.
//!
//! Elements are drawn underlays first, then in list order. Asset elements
//! are resampled into their boxes, text elements get their string in the
//! largest 8x8-bitmap font size that fits, and everything else gets the
//! category fill and border.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{denormalize, Canvas, Content, Element, IntRect, LayoutError, LayoutRecord};
use crate::raster::RgbaImage;

const FONT_SEARCH_STEPS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("asset `{0}` is not available")]
    MissingAsset(String),
    #[error("layouts differ in length: {gt} ground-truth vs {pred} predicted elements")]
    LengthMismatch { gt: usize, pred: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoryStyle {
    pub fill: [u8; 4],
    pub border: [u8; 4],
    pub border_px: u32,
    pub text_color: [u8; 4],
    pub max_font_px: u32,
}

impl Default for CategoryStyle {
    fn default() -> Self {
        CategoryStyle {
            fill: [128, 128, 128, 96],
            border: [64, 64, 64, 255],
            border_px: 1,
            text_color: [20, 20, 20, 255],
            max_font_px: 96,
        }
    }
}

/// Per-category drawing defaults, loadable from a JSON style file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSpec {
    pub styles: BTreeMap<String, CategoryStyle>,
    pub fallback: CategoryStyle,
    /// Categories drawn before everything else.
    pub underlays: Vec<String>,
}

impl Default for RenderSpec {
    fn default() -> Self {
        let mut styles = BTreeMap::new();
        styles.insert(
            "underlay".to_string(),
            CategoryStyle {
                fill: [255, 236, 179, 200],
                border: [0, 0, 0, 0],
                border_px: 0,
                ..CategoryStyle::default()
            },
        );
        styles.insert(
            "logo".to_string(),
            CategoryStyle {
                fill: [66, 133, 244, 110],
                border: [25, 80, 170, 255],
                ..CategoryStyle::default()
            },
        );
        styles.insert(
            "text".to_string(),
            CategoryStyle {
                fill: [234, 67, 53, 90],
                border: [160, 30, 20, 255],
                ..CategoryStyle::default()
            },
        );
        RenderSpec {
            styles,
            fallback: CategoryStyle::default(),
            underlays: alloc::vec!["underlay".into(), "text background".into()],
        }
    }
}

impl RenderSpec {
    pub fn style(&self, category: &str) -> &CategoryStyle {
        self.styles.get(category).unwrap_or(&self.fallback)
    }

    /// Drawing order: underlays first, otherwise list order.
    pub fn draw_order(&self, elements: &[Element]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..elements.len()).collect();
        order.sort_by_key(|&i| !self.underlays.contains(&elements[i].category));
        order
    }
}

/// Read-only lookup of decoded raster assets.
pub trait AssetSource {
    fn asset(&self, id: &str) -> Option<&RgbaImage>;
}

impl AssetSource for BTreeMap<String, RgbaImage> {
    fn asset(&self, id: &str) -> Option<&RgbaImage> {
        self.get(id)
    }
}

/// An asset source with nothing in it.
pub struct NoAssets;

impl AssetSource for NoAssets {
    fn asset(&self, _id: &str) -> Option<&RgbaImage> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: RgbaImage,
    pub warnings: Vec<String>,
}

fn pixel_rect(el: &Element, canvas: Canvas) -> Result<IntRect, LayoutError> {
    Ok(denormalize(el.bbox, canvas)?.clip(canvas.width_px, canvas.height_px))
}

/// Draws `record` over `background` (blank white when `None`).
///
/// A background whose size differs from the canvas is resampled to it.
pub fn render(
    record: &LayoutRecord,
    background: Option<&RgbaImage>,
    assets: &dyn AssetSource,
    spec: &RenderSpec,
) -> Result<Rendered, RenderError> {
    let canvas = record.canvas;
    canvas.check()?;
    let mut image = match background {
        Some(bg) => bg.resize_bilinear(canvas.width_px, canvas.height_px),
        None => RgbaImage::new(canvas.width_px, canvas.height_px, [255, 255, 255, 255]),
    };
    let mut warnings = Vec::new();
    for i in spec.draw_order(&record.elements) {
        let el = &record.elements[i];
        let rect = pixel_rect(el, canvas)?;
        if rect.is_empty() {
            warnings.push(format!(
                "element {i} ({}) has no pixel extent; skipped",
                el.category
            ));
            continue;
        }
        let style = spec.style(&el.category);
        match &el.content {
            Content::Asset(id) => {
                let asset = assets
                    .asset(id)
                    .ok_or_else(|| RenderError::MissingAsset(id.clone()))?;
                let scaled = asset.resize_bilinear(rect.width() as u32, rect.height() as u32);
                image.draw_image(&scaled, rect.left, rect.top);
            }
            Content::Text(text) => {
                if !draw_text(&mut image, rect, text, style.text_color, style.max_font_px) {
                    warnings.push(format!("element {i}: text does not fit at any font size"));
                }
            }
            Content::None => {
                image.fill_rect(rect, style.fill);
                image.stroke_rect(rect, style.border_px as i64, style.border);
            }
        }
    }
    Ok(Rendered { image, warnings })
}

fn glyph(c: char) -> [u8; 8] {
    use font8x8::legacy::{BASIC_LEGACY, LATIN_LEGACY};
    let code = c as usize;
    match code {
        0..=127 => BASIC_LEGACY[code],
        0xA0..=0xFF => LATIN_LEGACY[code - 0xA0],
        _ => BASIC_LEGACY['?' as usize],
    }
}

/// Greedy word wrap to at most `max_chars` per line; `None` if a word is too long.
fn wrap(text: &str, max_chars: usize) -> Option<Vec<Vec<char>>> {
    let mut lines: Vec<Vec<char>> = Vec::new();
    for paragraph in text.split('\n') {
        let mut line: Vec<char> = Vec::new();
        for word in paragraph.split_whitespace() {
            let w: Vec<char> = word.chars().collect();
            if w.len() > max_chars {
                return None;
            }
            let needed = if line.is_empty() {
                w.len()
            } else {
                line.len() + 1 + w.len()
            };
            if needed > max_chars {
                lines.push(core::mem::take(&mut line));
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.extend(w);
        }
        lines.push(line);
    }
    Some(lines)
}

fn layout_text(text: &str, rect: IntRect, size: i64) -> Option<Vec<Vec<char>>> {
    if size <= 0 {
        return None;
    }
    let lines = wrap(text, (rect.width() / size) as usize)?;
    (lines.len() as i64 * size <= rect.height()).then_some(lines)
}

/// Largest font size in `1..=max_px` at which `text` fits `rect`, found by bisection.
pub fn fit_font_size(text: &str, rect: IntRect, max_px: u32) -> Option<i64> {
    let mut lo = 1i64;
    let mut hi = rect.height().min(max_px as i64).max(1);
    for _ in 0..FONT_SEARCH_STEPS {
        if lo >= hi {
            break;
        }
        let mid = (lo + hi + 1) / 2;
        if layout_text(text, rect, mid).is_some() {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    layout_text(text, rect, lo).map(|_| lo)
}

fn draw_text(
    image: &mut RgbaImage,
    rect: IntRect,
    text: &str,
    color: [u8; 4],
    max_px: u32,
) -> bool {
    if text.trim().is_empty() {
        return true;
    }
    let Some(size) = fit_font_size(text, rect, max_px) else {
        return false;
    };
    let lines = layout_text(text, rect, size).unwrap_or_default();
    let block_h = lines.len() as i64 * size;
    let mut y = rect.top + (rect.height() - block_h) / 2;
    for line in lines {
        let mut x = rect.left + (rect.width() - line.len() as i64 * size) / 2;
        for c in line {
            let g = glyph(c);
            for py in 0..size {
                let row = g[(py * 8 / size) as usize];
                for px in 0..size {
                    if row >> (px * 8 / size) & 1 == 1 {
                        let (tx, ty) = (x + px, y + py);
                        if rect.contains(tx, ty) {
                            image.blend(tx as u32, ty as u32, color);
                        }
                    }
                }
            }
            x += size;
        }
        y += size;
    }
    true
}

/// Cuts each ground-truth box out of `gt_poster`, resamples it to the
/// matching predicted box and pastes it there, in element order.
pub fn patch_transplant(
    gt_poster: &RgbaImage,
    gt: &[Element],
    pred: &[Element],
) -> Result<Rendered, RenderError> {
    if gt.len() != pred.len() {
        return Err(RenderError::LengthMismatch {
            gt: gt.len(),
            pred: pred.len(),
        });
    }
    let canvas = Canvas::new(gt_poster.width, gt_poster.height)?;
    let mut image = gt_poster.clone();
    let mut warnings = Vec::new();
    for (i, (g, p)) in gt.iter().zip(pred).enumerate() {
        let (src, dst) = (pixel_rect(g, canvas)?, pixel_rect(p, canvas)?);
        if src.is_empty() || dst.is_empty() {
            warnings.push(format!("element {i} has a zero-area box; skipped"));
            continue;
        }
        let patch = gt_poster
            .crop(src)
            .resize_bilinear(dst.width() as u32, dst.height() as u32);
        image.paste(&patch, dst.left, dst.top);
    }
    Ok(Rendered { image, warnings })
}
