//! Content-independent metrics computed from boxes and categories only.
//!
//! An element is *valid* when its normalized area is at least [`MIN_AREA`].
//! Overlap, alignment and the underlay scores only look at valid elements;
//! overlap additionally ignores underlays. Degenerate inputs (no underlays,
//! a single element) resolve to the best value of the metric and are listed
//! in the report diagnostics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::MetricReport;
use crate::layout::{AlignAxis, CategoryVocabulary, Element};
use crate::num;

pub const MIN_AREA: f64 = 1e-3;
const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("visual balance is undefined when every element has zero area")]
    ZeroTotalArea,
}

pub fn is_valid(el: &Element) -> bool {
    el.bbox.area() >= MIN_AREA
}

/// Fraction of elements whose area reaches [`MIN_AREA`]; 0 for an empty layout.
pub fn validity(elements: &[Element]) -> f64 {
    if elements.is_empty() {
        return 0.0;
    }
    elements.iter().filter(|e| is_valid(e)).count() as f64 / elements.len() as f64
}

/// Mean IoU over unordered pairs of valid, non-underlay elements.
pub fn overlap(elements: &[Element], vocab: &CategoryVocabulary) -> f64 {
    let boxes: Vec<_> = elements
        .iter()
        .filter(|e| is_valid(e) && !vocab.is_underlay(&e.category))
        .map(|e| e.bbox)
        .collect();
    if boxes.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            sum += boxes[i].iou(&boxes[j]);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Per valid element, the smallest gap to another valid element on any of
/// the six alignment axes. `None` for elements that are not valid.
pub fn alignment_gaps(elements: &[Element]) -> Vec<Option<f64>> {
    let valid: Vec<usize> = (0..elements.len())
        .filter(|&i| is_valid(&elements[i]))
        .collect();
    let mut gaps = alloc::vec![None; elements.len()];
    if valid.len() < 2 {
        for &i in &valid {
            gaps[i] = Some(0.0);
        }
        return gaps;
    }
    for &i in &valid {
        let a = &elements[i].bbox;
        let mut best = f64::INFINITY;
        for &j in valid.iter().filter(|&&j| j != i) {
            let b = &elements[j].bbox;
            for axis in AlignAxis::ALL {
                best = best.min((a.axis(axis) - b.axis(axis)).abs());
            }
        }
        gaps[i] = Some(best);
    }
    gaps
}

/// Mean of [`alignment_gaps`] over valid elements; 0 with fewer than two.
pub fn alignment(elements: &[Element]) -> f64 {
    let gaps: Vec<f64> = alignment_gaps(elements).into_iter().flatten().collect();
    if gaps.len() < 2 {
        return 0.0;
    }
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

/// For each valid underlay, the best coverage of a valid non-underlay element
/// by it: `max_e area(e ∩ u) / area(e)`.
pub fn underlay_coverage(elements: &[Element], vocab: &CategoryVocabulary) -> Vec<f64> {
    let (underlays, others): (Vec<&Element>, Vec<&Element>) = elements
        .iter()
        .filter(|e| is_valid(e))
        .partition(|e| vocab.is_underlay(&e.category));
    underlays
        .iter()
        .map(|u| {
            others
                .iter()
                .map(|e| e.bbox.intersection_area(&u.bbox) / e.bbox.area())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Mean underlay coverage; 1 when there are no underlays.
pub fn underlay_loose(elements: &[Element], vocab: &CategoryVocabulary) -> f64 {
    let c = underlay_coverage(elements, vocab);
    if c.is_empty() {
        return 1.0;
    }
    c.iter().sum::<f64>() / c.len() as f64
}

/// Fraction of underlays that fully contain some element; 1 when there are none.
pub fn underlay_strict(elements: &[Element], vocab: &CategoryVocabulary) -> f64 {
    let c = underlay_coverage(elements, vocab);
    if c.is_empty() {
        return 1.0;
    }
    c.iter().filter(|&&v| v >= 1.0 - CONTAIN_TOL).count() as f64 / c.len() as f64
}

/// Distance of the area-weighted centroid from the canvas center.
pub fn visual_balance(elements: &[Element]) -> Result<f64, GeometryError> {
    let total: f64 = elements.iter().map(|e| e.bbox.area().max(0.0)).sum();
    if total <= 0.0 {
        return Err(GeometryError::ZeroTotalArea);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for e in elements {
        let a = e.bbox.area().max(0.0);
        let (x, y) = e.bbox.center();
        cx += a * x;
        cy += a * y;
    }
    cx /= total;
    cy /= total;
    Ok(num::sqrt((cx - 0.5) * (cx - 0.5) + (cy - 0.5) * (cy - 0.5)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub val: f64,
    pub ove: f64,
    pub ali: f64,
    pub und_l: f64,
    pub und_s: f64,
    /// `None` when every element has zero area.
    pub vb: Option<f64>,
    pub alignment_gaps: Vec<Option<f64>>,
    pub underlay_coverage: Vec<f64>,
    pub notes: Vec<String>,
}

pub fn evaluate(elements: &[Element], vocab: &CategoryVocabulary) -> GeometryReport {
    let mut notes = Vec::new();
    let invalid = elements.iter().filter(|e| !is_valid(e)).count();
    if elements.is_empty() {
        notes.push("empty layout: Val = 0".into());
    } else if invalid > 0 {
        notes.push(format!("{invalid} element(s) below the minimum area"));
    }
    let coverage = underlay_coverage(elements, vocab);
    if coverage.is_empty() {
        notes.push("no underlays: Und_l = Und_s = 1".into());
    }
    if elements.iter().filter(|e| is_valid(e)).count() < 2 {
        notes.push("fewer than two valid elements: Ali = Ove = 0".into());
    }
    let vb = visual_balance(elements).ok();
    if vb.is_none() {
        notes.push("zero total area: VB undefined".into());
    }
    GeometryReport {
        val: validity(elements),
        ove: overlap(elements, vocab),
        ali: alignment(elements),
        und_l: underlay_loose(elements, vocab),
        und_s: underlay_strict(elements, vocab),
        vb,
        alignment_gaps: alignment_gaps(elements),
        underlay_coverage: coverage,
        notes,
    }
}

impl GeometryReport {
    pub fn to_report(&self) -> MetricReport {
        let mut r = MetricReport::default();
        r.insert("Val", self.val);
        r.insert("Ove", self.ove);
        r.insert("Ali", self.ali);
        r.insert("Und_l", self.und_l);
        r.insert("Und_s", self.und_s);
        if let Some(vb) = self.vb {
            r.insert("VB", vb);
        }
        r.diagnostics = self.notes.clone();
        r
    }
}
