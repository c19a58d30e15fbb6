//! Ground-truth-relative scores and the Fréchet distance between Gaussian
//! summaries of embedding sets.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::matching::{assignment_value, max_weight_assignment};
use crate::layout::{Element, NormBox};
use crate::num;

/// Eigenvalues above this negative bound are treated as numerical zeros.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("embedding set is empty")]
    Empty,
    #[error("at least 2 vectors are needed for a covariance, got {0}")]
    TooFew(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
}

/// Pair weight used by [`matched_iou`].
pub fn iou_weight(a: &Element, b: &Element) -> f64 {
    if a.category != b.category {
        return 0.0;
    }
    a.bbox.iou(&b.bbox)
}

/// Pair weight used by [`docsim`]:
/// `min(sqrt(area_a), sqrt(area_b)) * 2^(-|Δcenter| - 2(|Δw| + |Δh|))`, gated on category.
pub fn docsim_weight(a: &Element, b: &Element) -> f64 {
    if a.category != b.category {
        return 0.0;
    }
    let (ba, bb): (&NormBox, &NormBox) = (&a.bbox, &b.bbox);
    let (ax, ay) = ba.center();
    let (bx, by) = bb.center();
    let dist = num::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by));
    let shape = (ba.width() - bb.width()).abs() + (ba.height() - bb.height()).abs();
    let size = num::sqrt(ba.area().max(0.0)).min(num::sqrt(bb.area().max(0.0)));
    size * num::exp2(-dist - 2.0 * shape)
}

fn categories<'a>(pred: &'a [Element], gt: &'a [Element]) -> BTreeSet<&'a str> {
    pred.iter().chain(gt).map(|e| e.category.as_str()).collect()
}

/// Best matched weight per category (sorted by label) divided by the larger
/// layout size. Both empty → 1, exactly one empty → 0.
pub fn matching_score(
    pred: &[Element],
    gt: &[Element],
    weight: impl Fn(&Element, &Element) -> f64,
) -> f64 {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut total = 0.0;
    for cat in categories(pred, gt) {
        let p: Vec<&Element> = pred.iter().filter(|e| e.category == cat).collect();
        let g: Vec<&Element> = gt.iter().filter(|e| e.category == cat).collect();
        if p.is_empty() || g.is_empty() {
            continue;
        }
        let w: Vec<Vec<f64>> = p
            .iter()
            .map(|a| g.iter().map(|b| weight(a, b)).collect())
            .collect();
        total += assignment_value(&w, &max_weight_assignment(&w));
    }
    total / pred.len().max(gt.len()) as f64
}

pub fn matched_iou(pred: &[Element], gt: &[Element]) -> f64 {
    matching_score(pred, gt, iou_weight)
}

pub fn docsim(pred: &[Element], gt: &[Element]) -> f64 {
    matching_score(pred, gt, docsim_weight)
}

/// Feature vectors of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: Vec<Vec<f64>>,
    pub provenance: String,
}

impl EmbeddingSet {
    pub fn new(
        vectors: Vec<Vec<f64>>,
        provenance: impl Into<String>,
    ) -> Result<Self, SimilarityError> {
        let dim = vectors.first().ok_or(SimilarityError::Empty)?.len();
        if dim == 0 {
            return Err(SimilarityError::ZeroDimension);
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(SimilarityError::Dimension {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(SimilarityError::NonFinite);
            }
        }
        Ok(EmbeddingSet {
            vectors,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Mean and covariance of an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, SimilarityError> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(SimilarityError::Dimension {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(SimilarityError::NonFinite);
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(GaussianSummary { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (n − 1) covariance, symmetrized.
pub fn gaussian_summary(set: &EmbeddingSet) -> Result<GaussianSummary, SimilarityError> {
    let n = set.len();
    if n < 2 {
        return Err(SimilarityError::TooFew(n));
    }
    let d = set.dim();
    let mut mean = DVector::zeros(d);
    for v in set.vectors() {
        mean += DVector::from_column_slice(v);
    }
    mean /= n as f64;
    let mut centered = DMatrix::zeros(n, d);
    for (i, v) in set.vectors().iter().enumerate() {
        for j in 0..d {
            centered[(i, j)] = v[j] - mean[j];
        }
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    GaussianSummary::new(mean, cov)
}

/// Symmetric PSD square root by eigendecomposition; small negative
/// eigenvalues are clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| num::sqrt(l.max(0.0)));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Squared Fréchet distance
/// `|μa − μb|² + Tr(Σa + Σb − 2 (Σa Σb)^½)`, clamped at 0.
///
/// The trace of `(Σa Σb)^½` is taken from the symmetric product
/// `Σa^½ Σb Σa^½`, which has the same eigenvalues.
pub fn frechet_distance(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64, SimilarityError> {
    if a.dim() != b.dim() {
        return Err(SimilarityError::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let finite = |g: &GaussianSummary| {
        g.mean
            .iter()
            .chain(g.covariance.iter())
            .all(|v| v.is_finite())
    };
    if !finite(a) || !finite(b) {
        return Err(SimilarityError::NonFinite);
    }
    let diff = &a.mean - &b.mean;
    let root_a = psd_sqrt(&a.covariance);
    let inner = &root_a * &b.covariance * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| if l < PSD_TOLERANCE { 0.0 } else { num::sqrt(l) })
        .sum();
    let d2 = diff.dot(&diff) + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    Ok(d2.max(0.0))
}
