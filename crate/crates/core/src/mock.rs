//! Deterministic stand-in for a layout model.
//!
//! Elements are stacked top to bottom, each 0.8 wide and centered
//! horizontally, 0.08 tall with 0.02 gaps. The stack starts at the top of the
//! tallest run of mask rows whose mean saliency is below
//! [`CALM_ROW_THRESHOLD`] (the whole canvas without a mask). A stack taller
//! than that band is compressed uniformly to fit, unless that would leave
//! the boxes below the validity area.

use alloc::string::String;
use alloc::vec::Vec;

use crate::layout::{Element, NormBox};
use crate::metrics::content::SaliencyMask;
use crate::metrics::geometry::MIN_AREA;

pub const ELEMENT_LEFT: f64 = 0.1;
pub const ELEMENT_RIGHT: f64 = 0.9;
pub const ELEMENT_HEIGHT: f64 = 0.08;
pub const ELEMENT_GAP: f64 = 0.02;
pub const CALM_ROW_THRESHOLD: f64 = 0.2;

/// Normalized `(top, bottom)` of the tallest calm horizontal band.
pub fn calm_band(mask: Option<&SaliencyMask>) -> (f64, f64) {
    let Some(mask) = mask else {
        return (0.0, 1.0);
    };
    let means = mask.row_means();
    let (mut best, mut run_start) = ((0usize, 0usize), None);
    for (y, &m) in means
        .iter()
        .chain(core::iter::once(&f64::INFINITY))
        .enumerate()
    {
        match (m < CALM_ROW_THRESHOLD, run_start) {
            (true, None) => run_start = Some(y),
            (false, Some(s)) => {
                if y - s > best.1 - best.0 {
                    best = (s, y);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if best.1 == best.0 {
        return (0.0, 1.0);
    }
    let h = mask.height as f64;
    (best.0 as f64 / h, best.1 as f64 / h)
}

pub fn mock_layout(labels: &[String], mask: Option<&SaliencyMask>) -> Vec<Element> {
    let n = labels.len();
    if n == 0 {
        return Vec::new();
    }
    let natural = n as f64 * ELEMENT_HEIGHT + (n - 1) as f64 * ELEMENT_GAP;
    let fit = |(top, bottom): (f64, f64)| (natural / (bottom - top)).max(1.0).recip();
    let mut band = calm_band(mask);
    // A band too thin for valid boxes is abandoned for the whole canvas.
    if ELEMENT_HEIGHT * fit(band) * (ELEMENT_RIGHT - ELEMENT_LEFT) < 2.0 * MIN_AREA {
        band = (0.0, 1.0);
    }
    let (top, scale) = (band.0, fit(band));
    let (height, step) = (
        ELEMENT_HEIGHT * scale,
        (ELEMENT_HEIGHT + ELEMENT_GAP) * scale,
    );
    labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let y = top + i as f64 * step;
            Element::new(
                label.clone(),
                NormBox::new(ELEMENT_LEFT, y, ELEMENT_RIGHT, (y + height).min(1.0)),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::quantize;
    use alloc::vec;

    fn labels(n: usize) -> Vec<String> {
        vec![String::from("text"); n]
    }

    #[test]
    fn stated_examples() {
        let one = mock_layout(&labels(1), None);
        assert_eq!(one[0].bbox, NormBox::new(0.1, 0.0, 0.9, 0.08));
        let three = mock_layout(&labels(3), None);
        let tops: Vec<f64> = three.iter().map(|e| quantize(e.bbox, 3).top).collect();
        assert_eq!(tops, vec![0.0, 0.1, 0.2]);
        assert!(mock_layout(&[], None).is_empty());
    }

    #[test]
    fn overflow_is_compressed() {
        let many = mock_layout(&labels(25), None);
        assert!(many.last().unwrap().bbox.bottom <= 1.0 + 1e-12);
        for w in many.windows(2) {
            assert!(w[0].bbox.bottom < w[1].bbox.top);
        }
    }

    #[test]
    fn stack_starts_in_calm_band() {
        // Rows 0..40 salient, 40..100 calm.
        let mask = SaliencyMask::from_fn(50, 100, |_, y| if y < 40 { 1.0 } else { 0.0 });
        assert_eq!(calm_band(Some(&mask)), (0.4, 1.0));
        let els = mock_layout(&labels(2), Some(&mask));
        assert_eq!(els[0].bbox.top, 0.4);
        let thin = SaliencyMask::from_fn(10, 100, |_, y| if y == 50 { 0.0 } else { 1.0 });
        assert_eq!(mock_layout(&labels(5), Some(&thin))[0].bbox.top, 0.0);
        let all_salient = SaliencyMask::from_fn(10, 10, |_, _| 1.0);
        assert_eq!(calm_band(Some(&all_salient)), (0.0, 1.0));
    }
}
