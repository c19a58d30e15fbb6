//! Canonical layout model: canvases, normalized boxes, elements and records.
//!
//! Boxes are stored in corner order `(left, top, right, bottom)` as fractions
//! of the canvas width and height. Pixel rectangles are converted with
//! [`normalize`] and [`denormalize`]; wire coordinates are truncated with
//! [`quantize`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num;

/// Number of decimals kept in wire coordinates unless configured otherwise.
pub const DEFAULT_PRECISION: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("invalid canvas {width}x{height}: both dimensions must be positive")]
    InvalidCanvas { width: u32, height: u32 },
    #[error("element {index}: {field} {problem}")]
    Validation {
        index: usize,
        field: Field,
        problem: String,
    },
    #[error("duplicate label `{0}` in vocabulary")]
    DuplicateLabel(String),
    #[error("underlay label `{0}` is not part of the vocabulary")]
    UnknownUnderlay(String),
}

/// Pixel dimensions of a poster background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width_px: u32,
    pub height_px: u32,
}

impl Canvas {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self, LayoutError> {
        let canvas = Canvas {
            width_px,
            height_px,
        };
        canvas.check()?;
        Ok(canvas)
    }

    pub(crate) fn check(&self) -> Result<(), LayoutError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(LayoutError::InvalidCanvas {
                width: self.width_px,
                height: self.height_px,
            });
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width_px as usize * self.height_px as usize
    }
}

impl fmt::Display for Canvas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width_px, self.height_px)
    }
}

/// A rectangle in (possibly fractional) pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelRect {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl PixelRect {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        PixelRect {
            left,
            top,
            right,
            bottom,
        }
    }

    /// Builds a corner rectangle from an `(x, y, width, height)` annotation.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Self {
        PixelRect::new(x, y, x + w, y + h)
    }
}

/// A rectangle snapped to the integer pixel grid. `right`/`bottom` are exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntRect {
    pub left: i64,
    pub top: i64,
    pub right: i64,
    pub bottom: i64,
}

impl IntRect {
    pub fn width(&self) -> i64 {
        (self.right - self.left).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.bottom - self.top).max(0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    /// Intersects with `[0, width) x [0, height)`.
    pub fn clip(&self, width: u32, height: u32) -> IntRect {
        IntRect {
            left: self.left.clamp(0, width as i64),
            top: self.top.clamp(0, height as i64),
            right: self.right.clamp(0, width as i64),
            bottom: self.bottom.clamp(0, height as i64),
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.left && x < self.right && y >= self.top && y < self.bottom
    }
}

/// Axis-aligned box in normalized canvas coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormBox {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

/// The six edge and center lines used for alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlignAxis {
    Left,
    CenterX,
    Right,
    Top,
    CenterY,
    Bottom,
}

impl AlignAxis {
    pub const ALL: [AlignAxis; 6] = [
        AlignAxis::Left,
        AlignAxis::CenterX,
        AlignAxis::Right,
        AlignAxis::Top,
        AlignAxis::CenterY,
        AlignAxis::Bottom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlignAxis::Left => "left",
            AlignAxis::CenterX => "x-center",
            AlignAxis::Right => "right",
            AlignAxis::Top => "top",
            AlignAxis::CenterY => "y-center",
            AlignAxis::Bottom => "bottom",
        }
    }

    pub fn from_name(name: &str) -> Option<AlignAxis> {
        let axis = match name.to_ascii_lowercase().as_str() {
            "left" => AlignAxis::Left,
            "x-center" | "xcenter" | "center-x" | "centerx" => AlignAxis::CenterX,
            "right" => AlignAxis::Right,
            "top" => AlignAxis::Top,
            "y-center" | "ycenter" | "center-y" | "centery" => AlignAxis::CenterY,
            "bottom" => AlignAxis::Bottom,
            _ => return None,
        };
        Some(axis)
    }
}

impl NormBox {
    pub const fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        NormBox {
            left,
            top,
            right,
            bottom,
        }
    }

    pub const FULL: NormBox = NormBox::new(0.0, 0.0, 1.0, 1.0);

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.left + self.right) / 2.0,
            (self.top + self.bottom) / 2.0,
        )
    }

    pub fn axis(&self, axis: AlignAxis) -> f64 {
        match axis {
            AlignAxis::Left => self.left,
            AlignAxis::CenterX => (self.left + self.right) / 2.0,
            AlignAxis::Right => self.right,
            AlignAxis::Top => self.top,
            AlignAxis::CenterY => (self.top + self.bottom) / 2.0,
            AlignAxis::Bottom => self.bottom,
        }
    }

    pub fn intersection_area(&self, other: &NormBox) -> f64 {
        let w = self.right.min(other.right) - self.left.max(other.left);
        let h = self.bottom.min(other.bottom) - self.top.max(other.top);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union; zero when the union is empty.
    pub fn iou(&self, other: &NormBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// True when `other` lies within `self`, allowing `tol` slack on every edge.
    pub fn contains_box(&self, other: &NormBox, tol: f64) -> bool {
        other.left >= self.left - tol
            && other.top >= self.top - tol
            && other.right <= self.right + tol
            && other.bottom <= self.bottom + tol
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.left, self.top, self.right, self.bottom]
    }

    pub fn from_coords(c: [f64; 4]) -> Self {
        NormBox::new(c[0], c[1], c[2], c[3])
    }

    /// True when the box satisfies `0 <= left <= right <= 1` and the vertical analogue.
    pub fn is_well_formed(&self) -> bool {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        self.coords().iter().all(|&v| in_unit(v))
            && self.left <= self.right
            && self.top <= self.bottom
    }
}

/// What an element carries besides its geometry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Content {
    #[default]
    None,
    Text(String),
    /// Opaque identifier resolved by an asset store.
    Asset(String),
}

impl Content {
    pub fn text(&self) -> Option<&str> {
        match self {
            Content::Text(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub category: String,
    pub bbox: NormBox,
    pub content: Content,
    /// Degrees in `(-180, 180]`. Metrics ignore it and use the axis-aligned box.
    pub rotation_deg: Option<f64>,
}

impl Element {
    pub fn new(category: impl Into<String>, bbox: NormBox) -> Self {
        Element {
            category: category.into(),
            bbox,
            content: Content::None,
            rotation_deg: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.content = Content::Text(text.into());
        self
    }

    pub fn with_asset(mut self, id: impl Into<String>) -> Self {
        self.content = Content::Asset(id.into());
        self
    }

    pub fn with_rotation(mut self, degrees: f64) -> Self {
        self.rotation_deg = Some(degrees);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutRecord {
    pub id: String,
    pub canvas: Canvas,
    pub elements: Vec<Element>,
    pub domain_tag: String,
    pub background_ref: Option<String>,
    pub saliency_ref: Option<String>,
}

impl LayoutRecord {
    pub fn new(id: impl Into<String>, canvas: Canvas, domain_tag: impl Into<String>) -> Self {
        LayoutRecord {
            id: id.into(),
            canvas,
            elements: Vec::new(),
            domain_tag: domain_tag.into(),
            background_ref: None,
            saliency_ref: None,
        }
    }

    pub fn with_elements(mut self, elements: Vec<Element>) -> Self {
        self.elements = elements;
        self
    }

    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(|e| e.category.clone()).collect()
    }
}

/// Category labels of a dataset and which of them act as underlays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryVocabulary {
    pub name: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub underlay_labels: Vec<String>,
}

impl CategoryVocabulary {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
        underlay_labels: impl IntoIterator<Item = S>,
    ) -> Result<Self, LayoutError> {
        let vocab = CategoryVocabulary {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
            underlay_labels: underlay_labels.into_iter().map(Into::into).collect(),
        };
        vocab.check()?;
        Ok(vocab)
    }

    pub fn check(&self) -> Result<(), LayoutError> {
        for (i, label) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(label) {
                return Err(LayoutError::DuplicateLabel(label.clone()));
            }
        }
        for u in &self.underlay_labels {
            if !self.labels.contains(u) {
                return Err(LayoutError::UnknownUnderlay(u.clone()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn is_underlay(&self, label: &str) -> bool {
        self.underlay_labels.iter().any(|l| l == label)
    }

    /// `{text, logo, underlay}`.
    pub fn posterlayout() -> Self {
        Self::builtin("posterlayout", &["text", "logo", "underlay"], &["underlay"])
    }

    /// `{logo, text, underlay, embellishment}`.
    pub fn cgl() -> Self {
        Self::builtin(
            "cgl",
            &["logo", "text", "underlay", "embellishment"],
            &["underlay"],
        )
    }

    pub fn qb_poster() -> Self {
        Self::builtin(
            "qb-poster",
            &[
                "title",
                "subtitle",
                "item logo",
                "item",
                "item title",
                "object",
                "text background",
                "decoration",
                "frame",
                "text",
            ],
            &["text background"],
        )
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "posterlayout" => Some(Self::posterlayout()),
            "cgl" => Some(Self::cgl()),
            "qb-poster" | "qbposter" => Some(Self::qb_poster()),
            _ => None,
        }
    }

    fn builtin(name: &str, labels: &[&str], underlays: &[&str]) -> Self {
        CategoryVocabulary {
            name: name.into(),
            labels: labels.iter().map(|s| String::from(*s)).collect(),
            underlay_labels: underlays.iter().map(|s| String::from(*s)).collect(),
        }
    }
}

/// Divides pixel coordinates by the canvas dimensions. Out-of-canvas input is not clamped.
pub fn normalize(rect: PixelRect, canvas: Canvas) -> Result<NormBox, LayoutError> {
    canvas.check()?;
    let w = canvas.width_px as f64;
    let h = canvas.height_px as f64;
    Ok(NormBox::new(
        rect.left / w,
        rect.top / h,
        rect.right / w,
        rect.bottom / h,
    ))
}

/// Scales back to pixels, rounding half away from zero.
pub fn denormalize(bbox: NormBox, canvas: Canvas) -> Result<IntRect, LayoutError> {
    canvas.check()?;
    let w = canvas.width_px as f64;
    let h = canvas.height_px as f64;
    Ok(IntRect {
        left: num::round(bbox.left * w) as i64,
        top: num::round(bbox.top * h) as i64,
        right: num::round(bbox.right * w) as i64,
        bottom: num::round(bbox.bottom * h) as i64,
    })
}

/// Truncates `value` toward zero to `k` decimal digits.
///
/// The result is the float nearest to `n / 10^k` for the largest integer `n`
/// whose value does not exceed `|value|`, so quantized values print and
/// parse back exactly and quantizing twice changes nothing.
pub fn quantize_value(value: f64, k: u32) -> f64 {
    if !value.is_finite() || value == 0.0 {
        return value;
    }
    let scale = num::pow10(k);
    let magnitude = value.abs();
    let mut n = num::trunc(magnitude * scale);
    // The product above is rounded; correct by at most one step either way.
    if (n + 1.0) / scale <= magnitude {
        n += 1.0;
    }
    if n > 0.0 && n / scale > magnitude {
        n -= 1.0;
    }
    let q = n / scale;
    if value < 0.0 {
        -q
    } else {
        q
    }
}

pub fn quantize(bbox: NormBox, k: u32) -> NormBox {
    NormBox::from_coords(bbox.coords().map(|c| quantize_value(c, k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationPolicy {
    Clamp,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Left,
    Top,
    Right,
    Bottom,
    /// Both horizontal edges.
    Horizontal,
    /// Both vertical edges.
    Vertical,
    Category,
    Rotation,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Field::Left => "left",
            Field::Top => "top",
            Field::Right => "right",
            Field::Bottom => "bottom",
            Field::Horizontal => "left/right",
            Field::Vertical => "top/bottom",
            Field::Category => "category",
            Field::Rotation => "rotation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixKind {
    Clamped { from: f64, to: f64 },
    Swapped,
    RotationWrapped { from: f64, to: f64 },
    UnknownCategory(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationNote {
    pub index: usize,
    pub field: Field,
    pub kind: FixKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub notes: Vec<ValidationNote>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }
}

/// Checks every element box, rotation and (when a vocabulary is given) label.
///
/// Under [`ValidationPolicy::Clamp`] coordinates are clamped into `[0, 1]`
/// (non-finite values become 0) and inverted corners are swapped; every fix
/// is noted. Unknown labels cannot be fixed and are only noted. Under
/// [`ValidationPolicy::Reject`] the first problem is returned as an error.
pub fn validate(
    record: &LayoutRecord,
    policy: ValidationPolicy,
    vocabulary: Option<&CategoryVocabulary>,
) -> Result<(LayoutRecord, ValidationReport), LayoutError> {
    let mut out = record.clone();
    let report = validate_elements(&mut out.elements, policy, vocabulary)?;
    Ok((out, report))
}

pub(crate) fn validate_elements(
    elements: &mut [Element],
    policy: ValidationPolicy,
    vocabulary: Option<&CategoryVocabulary>,
) -> Result<ValidationReport, LayoutError> {
    let mut report = ValidationReport::default();
    let reject = |index, field, problem: &str| LayoutError::Validation {
        index,
        field,
        problem: problem.into(),
    };

    for (index, el) in elements.iter_mut().enumerate() {
        if let Some(vocab) = vocabulary {
            if !vocab.contains(&el.category) {
                if policy == ValidationPolicy::Reject {
                    return Err(reject(index, Field::Category, "is not in the vocabulary"));
                }
                report.notes.push(ValidationNote {
                    index,
                    field: Field::Category,
                    kind: FixKind::UnknownCategory(el.category.clone()),
                });
            }
        }

        let fields = [Field::Left, Field::Top, Field::Right, Field::Bottom];
        let mut coords = el.bbox.coords();
        for (c, field) in coords.iter_mut().zip(fields) {
            let fixed = if c.is_finite() {
                c.clamp(0.0, 1.0)
            } else {
                0.0
            };
            if fixed != *c || (c.is_nan()) {
                if policy == ValidationPolicy::Reject {
                    return Err(reject(index, field, "is outside [0, 1]"));
                }
                report.notes.push(ValidationNote {
                    index,
                    field,
                    kind: FixKind::Clamped {
                        from: *c,
                        to: fixed,
                    },
                });
                *c = fixed;
            }
        }
        for (lo, hi, field) in [(0, 2, Field::Horizontal), (1, 3, Field::Vertical)] {
            if coords[lo] > coords[hi] {
                if policy == ValidationPolicy::Reject {
                    return Err(reject(index, field, "corners are inverted"));
                }
                coords.swap(lo, hi);
                report.notes.push(ValidationNote {
                    index,
                    field,
                    kind: FixKind::Swapped,
                });
            }
        }
        el.bbox = NormBox::from_coords(coords);

        if let Some(r) = el.rotation_deg {
            if !(r > -180.0 && r <= 180.0) {
                if policy == ValidationPolicy::Reject {
                    return Err(reject(index, Field::Rotation, "is outside (-180, 180]"));
                }
                let wrapped = wrap_degrees(r);
                report.notes.push(ValidationNote {
                    index,
                    field: Field::Rotation,
                    kind: FixKind::RotationWrapped {
                        from: r,
                        to: wrapped,
                    },
                });
                el.rotation_deg = Some(wrapped);
            }
        }
    }
    Ok(report)
}

fn wrap_degrees(r: f64) -> f64 {
    if !r.is_finite() {
        return 0.0;
    }
    let mut w = r - 360.0 * num::floor(r / 360.0);
    // w in [0, 360)
    if w > 180.0 {
        w -= 360.0;
    }
    w
}
