//! Background-aware metrics over a saliency mask or the background pixels.
//!
//! Boxes are snapped to the pixel grid with [`denormalize`] and clipped to
//! the canvas; all set sizes are exact pixel counts.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use super::MetricReport;
use crate::layout::{denormalize, Canvas, Element, LayoutError};
use crate::num;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContentError {
    #[error("raster is {raster_w}x{raster_h} but the canvas is {canvas_w}x{canvas_h}")]
    DimensionMismatch {
        raster_w: u32,
        raster_h: u32,
        canvas_w: u32,
        canvas_h: u32,
    },
    #[error("raster buffer holds {found} values, expected {expected}")]
    BufferLength { expected: usize, found: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Per-pixel importance in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMask {
    pub width: u32,
    pub height: u32,
    values: Vec<f32>,
}

impl SaliencyMask {
    /// Values outside `[0, 1]` are clamped; NaN becomes 0.
    pub fn new(width: u32, height: u32, mut values: Vec<f32>) -> Result<Self, ContentError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(ContentError::BufferLength {
                expected,
                found: values.len(),
            });
        }
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Ok(SaliencyMask {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f32) -> Self {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values).expect("length matches by construction")
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Complement `1 - v` of every value.
    pub fn inverted(&self) -> Self {
        SaliencyMask {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// Mean value of every pixel row.
    pub fn row_means(&self) -> Vec<f64> {
        self.values
            .chunks(self.width.max(1) as usize)
            .map(|row| row.iter().map(|&v| v as f64).sum::<f64>() / row.len().max(1) as f64)
            .collect()
    }
}

/// 8-bit RGB background pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackgroundImage {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
}

impl BackgroundImage {
    pub fn new(width: u32, height: u32, rgb: Vec<u8>) -> Result<Self, ContentError> {
        let expected = width as usize * height as usize * 3;
        if rgb.len() != expected {
            return Err(ContentError::BufferLength {
                expected,
                found: rgb.len(),
            });
        }
        Ok(BackgroundImage { width, height, rgb })
    }

    pub fn luma(&self, x: u32, y: u32) -> f64 {
        let o = (y as usize * self.width as usize + x as usize) * 3;
        0.299 * self.rgb[o] as f64 + 0.587 * self.rgb[o + 1] as f64 + 0.114 * self.rgb[o + 2] as f64
    }
}

fn check_dims(w: u32, h: u32, canvas: Canvas) -> Result<(), ContentError> {
    canvas.check()?;
    if w != canvas.width_px || h != canvas.height_px {
        return Err(ContentError::DimensionMismatch {
            raster_w: w,
            raster_h: h,
            canvas_w: canvas.width_px,
            canvas_h: canvas.height_px,
        });
    }
    Ok(())
}

/// Pixels covered by at least one of the selected elements.
pub fn coverage<'a>(
    elements: impl IntoIterator<Item = &'a Element>,
    canvas: Canvas,
) -> Result<Vec<bool>, ContentError> {
    let (w, h) = (canvas.width_px, canvas.height_px);
    let mut covered = vec![false; canvas.pixel_count()];
    for el in elements {
        let r = denormalize(el.bbox, canvas)?.clip(w, h);
        for y in r.top..r.bottom {
            let row = y as usize * w as usize;
            covered[row + r.left as usize..row + r.right as usize].fill(true);
        }
    }
    Ok(covered)
}

/// Pixel counts behind [`occlusion`] and [`utility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SaliencyCounts {
    pub salient: usize,
    pub salient_covered: usize,
    pub plain: usize,
    pub plain_covered: usize,
}

pub fn saliency_counts(
    elements: &[Element],
    canvas: Canvas,
    mask: &SaliencyMask,
    threshold: f64,
) -> Result<SaliencyCounts, ContentError> {
    check_dims(mask.width, mask.height, canvas)?;
    let covered = coverage(elements, canvas)?;
    let mut c = SaliencyCounts::default();
    for (&v, &u) in mask.values.iter().zip(&covered) {
        if v as f64 >= threshold {
            c.salient += 1;
            c.salient_covered += u as usize;
        } else {
            c.plain += 1;
            c.plain_covered += u as usize;
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Share of salient pixels (mask ≥ threshold) hidden under the element union.
pub fn occlusion(
    elements: &[Element],
    canvas: Canvas,
    mask: &SaliencyMask,
    threshold: f64,
) -> Result<f64, ContentError> {
    let c = saliency_counts(elements, canvas, mask, threshold)?;
    Ok(ratio(c.salient_covered, c.salient))
}

/// Share of non-salient pixels used by the element union.
pub fn utility(
    elements: &[Element],
    canvas: Canvas,
    mask: &SaliencyMask,
    threshold: f64,
) -> Result<f64, ContentError> {
    let c = saliency_counts(elements, canvas, mask, threshold)?;
    Ok(ratio(c.plain_covered, c.plain))
}

/// Central-difference gradient magnitude of the luma channel, scaled to `[0, 1]`.
///
/// Borders replicate the edge pixel. The scale divides by the largest
/// possible magnitude, `sqrt(2) * 255 / 2`.
pub fn gradient_magnitude(bg: &BackgroundImage) -> Vec<f64> {
    let (w, h) = (bg.width, bg.height);
    let luma: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| bg.luma(x, y))
        .collect();
    let at = |x: u32, y: u32| luma[y as usize * w as usize + x as usize];
    let max = num::sqrt(2.0) * 127.5;
    let mut out = Vec::with_capacity(luma.len());
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            out.push((num::sqrt(gx * gx + gy * gy) / max).min(1.0));
        }
    }
    out
}

/// Mean normalized gradient over pixels under text elements; 0 without text.
pub fn readability(
    elements: &[Element],
    canvas: Canvas,
    background: &BackgroundImage,
    text_categories: &[&str],
) -> Result<f64, ContentError> {
    check_dims(background.width, background.height, canvas)?;
    let texts = elements
        .iter()
        .filter(|e| text_categories.contains(&e.category.as_str()));
    let covered = coverage(texts, canvas)?;
    let count = covered.iter().filter(|&&c| c).count();
    if count == 0 {
        return Ok(0.0);
    }
    let grad = gradient_magnitude(background);
    let sum: f64 = grad
        .iter()
        .zip(&covered)
        .filter(|(_, &c)| c)
        .map(|(g, _)| g)
        .sum();
    Ok(sum / count as f64)
}

/// Occ/Uti (when a mask is given) and Rea (when a background is given).
pub fn evaluate(
    elements: &[Element],
    canvas: Canvas,
    mask: Option<&SaliencyMask>,
    threshold: f64,
    background: Option<&BackgroundImage>,
    text_categories: &[&str],
) -> Result<MetricReport, ContentError> {
    let mut r = MetricReport::default();
    if let Some(mask) = mask {
        let c = saliency_counts(elements, canvas, mask, threshold)?;
        r.insert("Occ", ratio(c.salient_covered, c.salient));
        r.insert("Uti", ratio(c.plain_covered, c.plain));
        if c.salient == 0 {
            r.diagnostics.push("no salient pixels: Occ = 0".into());
        }
        if c.plain == 0 {
            r.diagnostics.push("no non-salient pixels: Uti = 0".into());
        }
    }
    if let Some(bg) = background {
        r.insert("Rea", readability(elements, canvas, bg, text_categories)?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::NormBox;

    fn el(label: &str, b: [f64; 4]) -> Element {
        Element::new(label, NormBox::from_coords(b))
    }

    fn canvas() -> Canvas {
        Canvas::new(40, 20).unwrap()
    }

    fn left_half_mask() -> SaliencyMask {
        SaliencyMask::from_fn(40, 20, |x, _| if x < 20 { 1.0 } else { 0.0 })
    }

    #[test]
    fn half_salient_fixture() {
        let right = [el("text", [0.5, 0.0, 1.0, 1.0])];
        assert_eq!(
            occlusion(&right, canvas(), &left_half_mask(), 0.5).unwrap(),
            0.0
        );
        assert_eq!(
            utility(&right, canvas(), &left_half_mask(), 0.5).unwrap(),
            1.0
        );
    }

    #[test]
    fn full_cover_and_empty_conventions() {
        let all = [el("text", [0.0, 0.0, 1.0, 1.0])];
        assert_eq!(
            occlusion(&all, canvas(), &left_half_mask(), 0.5).unwrap(),
            1.0
        );
        let zero = SaliencyMask::from_fn(40, 20, |_, _| 0.0);
        assert_eq!(occlusion(&all, canvas(), &zero, 0.5).unwrap(), 0.0);
        assert_eq!(utility(&[], canvas(), &left_half_mask(), 0.5).unwrap(), 0.0);
        let inside = [el("text", [0.0, 0.0, 0.25, 0.5])];
        assert_eq!(
            utility(&inside, canvas(), &left_half_mask(), 0.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let small = SaliencyMask::from_fn(10, 10, |_, _| 1.0);
        assert!(matches!(
            occlusion(&[], canvas(), &small, 0.5),
            Err(ContentError::DimensionMismatch { .. })
        ));
        let bg = BackgroundImage::new(10, 10, vec![0; 300]).unwrap();
        assert!(readability(&[], canvas(), &bg, &["text"]).is_err());
    }

    #[test]
    fn mask_values_are_clamped() {
        let m = SaliencyMask::new(2, 1, vec![-1.0, 3.0]).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0]);
        assert!(SaliencyMask::new(2, 2, vec![0.0]).is_err());
    }

    #[test]
    fn constant_background_reads_zero() {
        let bg = BackgroundImage::new(40, 20, vec![90; 40 * 20 * 3]).unwrap();
        let t = [el("text", [0.1, 0.1, 0.9, 0.9])];
        assert_eq!(readability(&t, canvas(), &bg, &["text"]).unwrap(), 0.0);
        assert_eq!(readability(&[], canvas(), &bg, &["text"]).unwrap(), 0.0);
        let logo = [el("logo", [0.1, 0.1, 0.9, 0.9])];
        assert_eq!(readability(&logo, canvas(), &bg, &["text"]).unwrap(), 0.0);
    }

    #[test]
    fn step_edge_matches_hand_count() {
        // Columns 0..20 black, 20..40 white; columns 19 and 20 see a half step.
        let mut rgb = vec![0u8; 40 * 20 * 3];
        for y in 0..20 {
            for x in 20..40 {
                let o = (y * 40 + x) * 3;
                rgb[o..o + 3].copy_from_slice(&[255, 255, 255]);
            }
        }
        let bg = BackgroundImage::new(40, 20, rgb).unwrap();
        // Pixels x in 10..30, y in 0..10: 200 pixels, 20 of them on the edge.
        let t = [el("text", [0.25, 0.0, 0.75, 0.5])];
        let step = (255.0 * 1.0_f64) / 2.0 / (num::sqrt(2.0) * 127.5);
        let luma_white = 0.299 * 255.0 + 0.587 * 255.0 + 0.114 * 255.0;
        let step = step * luma_white / 255.0;
        let expected = 20.0 * step / 200.0;
        let got = readability(&t, canvas(), &bg, &["text"]).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn pixel_partition_identities() {
        let els = [
            el("text", [0.1, 0.1, 0.4, 0.6]),
            el("logo", [0.3, 0.5, 0.9, 0.95]),
        ];
        let mask = SaliencyMask::from_fn(
            40,
            20,
            |x, y| if (x * 7 + y * 3) % 5 < 2 { 1.0 } else { 0.0 },
        );
        let c = saliency_counts(&els, canvas(), &mask, 0.5).unwrap();
        let union = coverage(&els, canvas())
            .unwrap()
            .iter()
            .filter(|&&u| u)
            .count();
        assert_eq!(c.salient_covered + c.plain_covered, union);
        assert_eq!(c.salient + c.plain, 800);
        let inv = saliency_counts(&els, canvas(), &mask.inverted(), 0.5).unwrap();
        assert_eq!(c.salient_covered + inv.salient_covered, union);
    }
}
