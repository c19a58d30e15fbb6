//! Per-record evaluation across the metric families and the aggregate table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use posterkit_core::constraints::{self, ConstraintSet};
use posterkit_core::metrics::content::{self, BackgroundImage, ContentError, SaliencyMask};
use posterkit_core::metrics::{geometry, similarity, MetricReport, METRIC_COLUMNS};
use posterkit_core::{Canvas, CategoryVocabulary, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Geometry,
    Content,
    Similarity,
    Constraints,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Geometry,
        Family::Content,
        Family::Similarity,
        Family::Constraints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Geometry => "geometry",
            Family::Content => "content",
            Family::Similarity => "similarity",
            Family::Constraints => "constraints",
        }
    }

    /// Columns this family can fill.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Family::Geometry => &["Val", "Ove", "Ali", "Und_l", "Und_s", "VB"],
            Family::Content => &["Uti", "Occ", "Rea"],
            Family::Similarity => &["IoU", "DocSim"],
            Family::Constraints => &["Vio"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown metric family `{s}`"))
    }
}

/// Comma-separated family names; `all` selects every family.
pub fn parse_families(list: &str) -> Result<BTreeSet<Family>, String> {
    let mut out = BTreeSet::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Family::ALL);
        } else {
            out.insert(part.parse()?);
        }
    }
    Ok(out)
}

/// Labels scored by readability: non-underlay labels mentioning text or title.
pub fn text_categories(vocab: &CategoryVocabulary) -> Vec<&str> {
    vocab
        .labels
        .iter()
        .filter(|l| !vocab.is_underlay(l) && (l.contains("text") || l.contains("title")))
        .map(String::as_str)
        .collect()
}

/// Everything one record can be scored against; absent inputs skip metrics.
pub struct EvalInputs<'a> {
    pub vocabulary: &'a CategoryVocabulary,
    pub canvas: Canvas,
    pub predicted: &'a [Element],
    pub ground_truth: Option<&'a [Element]>,
    pub saliency: Option<&'a SaliencyMask>,
    pub background: Option<&'a BackgroundImage>,
    pub constraints: Option<&'a ConstraintSet>,
    pub threshold: f64,
}

pub fn evaluate(
    inputs: &EvalInputs<'_>,
    families: &BTreeSet<Family>,
) -> Result<MetricReport, ContentError> {
    let mut report = MetricReport::default();
    if families.contains(&Family::Geometry) {
        report.merge(geometry::evaluate(inputs.predicted, inputs.vocabulary).to_report());
    }
    if families.contains(&Family::Content) {
        let texts = text_categories(inputs.vocabulary);
        report.merge(content::evaluate(
            inputs.predicted,
            inputs.canvas,
            inputs.saliency,
            inputs.threshold,
            inputs.background,
            &texts,
        )?);
    }
    if families.contains(&Family::Similarity) {
        if let Some(gt) = inputs.ground_truth {
            report.insert("IoU", similarity::matched_iou(inputs.predicted, gt));
            report.insert("DocSim", similarity::docsim(inputs.predicted, gt));
        }
    }
    if families.contains(&Family::Constraints) {
        if let Some(set) = inputs.constraints {
            let v = constraints::check(inputs.predicted, set);
            report.insert("Vio", v.vio);
            for o in v
                .outcomes
                .iter()
                .filter(|o| o.verdict == constraints::Verdict::Violated)
            {
                report
                    .diagnostics
                    .push(format!("violated: {}", o.explanation));
            }
        }
    }
    Ok(report)
}

/// Requested columns that no report filled.
pub fn omitted(
    families: &BTreeSet<Family>,
    aggregate: &BTreeMap<String, f64>,
) -> Vec<&'static str> {
    families
        .iter()
        .flat_map(|f| f.columns().iter().copied())
        .filter(|c| !aggregate.contains_key(*c))
        .collect()
}

/// Aggregate means in the paper's column order, four decimals.
pub fn format_table(aggregate: &BTreeMap<String, f64>) -> String {
    let cols: Vec<&str> = METRIC_COLUMNS
        .iter()
        .copied()
        .filter(|c| aggregate.contains_key(*c))
        .collect();
    let cells: Vec<String> = cols
        .iter()
        .map(|c| format!("{:.4}", aggregate[*c]))
        .collect();
    crate::data::aligned(&[cols.iter().map(|c| c.to_string()).collect(), cells])
}
