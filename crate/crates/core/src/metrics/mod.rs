//! Layout quality metrics.
//!
//! * [`geometry`]: box-only scores (Val, Ove, Ali, Und_l, Und_s, VB).
//! * [`content`]: scores against a saliency mask or background (Occ, Uti, Rea).
//! * [`similarity`]: scores against ground truth (IoU, DocSim) and the
//!   Fréchet distance between embedding summaries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde_json::Value;

pub mod content;
pub mod geometry;
pub mod matching;
pub mod similarity;

/// Column order used when printing aggregate tables.
pub const METRIC_COLUMNS: [&str; 12] = [
    "Val", "Ove", "Ali", "Und_l", "Und_s", "Uti", "Occ", "Rea", "VB", "IoU", "DocSim", "Vio",
];

/// Named scalar scores for one layout plus free-form diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub values: BTreeMap<String, f64>,
    pub diagnostics: Vec<String>,
}

impl MetricReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn merge(&mut self, other: MetricReport) {
        self.values.extend(other.values);
        self.diagnostics.extend(other.diagnostics);
    }

    /// Flat JSON object keyed by metric name.
    pub fn to_json(&self) -> Value {
        Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), Value::from(*v)))
                .collect(),
        )
    }
}

/// Column-wise means over reports; a column only averages reports that have it.
pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in reports {
        for (k, v) in &r.values {
            let e = sums.entry(k.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_is_flat() {
        let mut r = MetricReport::default();
        r.insert("Val", 1.0);
        r.insert("Ove", 0.25);
        assert_eq!(
            serde_json::to_string(&r.to_json()).unwrap(),
            r#"{"Ove":0.25,"Val":1.0}"#
        );
    }

    #[test]
    fn aggregate_skips_missing_columns() {
        let mut a = MetricReport::default();
        a.insert("Val", 1.0);
        a.insert("Occ", 0.5);
        let mut b = MetricReport::default();
        b.insert("Val", 0.0);
        let m = aggregate([&a, &b]);
        assert_eq!(m["Val"], 0.5);
        assert_eq!(m["Occ"], 0.5);
    }
}
