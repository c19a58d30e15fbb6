//! JSON wire format, masked instructions, prompt assembly and recovery of
//! layouts from free-form model output.
//!
//! Wire shape: `{"layout":[{"label":..,"box":[l,t,r,b],"text":..}]}` with
//! keys always emitted in that order. Two optional keys extend it: `"asset"`
//! for asset content and `"rotation"` for non-zero rotations.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde_json::Value;
use thiserror::Error;

use crate::layout::{
    self, Canvas, CategoryVocabulary, Content, Element, FixKind, LayoutRecord, NormBox,
    ValidationPolicy,
};

/// Appended to the conversation when a reply could not be parsed.
pub const CORRECTION_PROMPT: &str = "Return only the JSON object.";

/// Prefix of the assistant turn in the instruction template.
pub const ANSWER_PREFIX: &str = "Sure! Here is the design result: ";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("schema error at element {index:?}: {message}")]
    Schema {
        index: Option<usize>,
        message: String,
    },
    #[error("no JSON object found in model output")]
    NoJson { raw: String },
    #[error("model output does not match the requested elements: expected {expected:?}, received {received:?}")]
    Reconciliation {
        expected: Vec<String>,
        received: Vec<String>,
    },
}

/// Elements decoded from the wire format, without canvas or record metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayoutFragment {
    pub elements: Vec<Element>,
    /// Tolerated oddities such as unknown keys.
    pub warnings: Vec<String>,
}

impl LayoutFragment {
    pub fn into_record(
        self,
        id: impl Into<String>,
        canvas: Canvas,
        domain_tag: impl Into<String>,
    ) -> LayoutRecord {
        LayoutRecord::new(id, canvas, domain_tag).with_elements(self.elements)
    }
}

/// Formats a number with at most `k` decimals, no exponent, at least one decimal.
pub fn format_coord(value: f64, k: u32) -> String {
    let q = layout::quantize_value(value, k);
    let q = if q == 0.0 { 0.0 } else { q };
    let mut s = format!("{:.*}", k as usize, q);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.push('0');
        }
    }
    s
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| "\"\"".to_owned())
}

fn write_element(out: &mut String, el: &Element, k: u32, with_box: bool) {
    out.push_str("{\"label\":");
    out.push_str(&json_string(&el.category));
    if with_box {
        out.push_str(",\"box\":[");
        for (i, c) in el.bbox.coords().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_coord(*c, k));
        }
        out.push(']');
    }
    match &el.content {
        Content::None => {}
        Content::Text(t) => {
            out.push_str(",\"text\":");
            out.push_str(&json_string(t));
        }
        Content::Asset(a) => {
            out.push_str(",\"asset\":");
            out.push_str(&json_string(a));
        }
    }
    if with_box {
        if let Some(r) = el.rotation_deg {
            if layout::quantize_value(r, k) != 0.0 {
                let _ = write!(out, ",\"rotation\":{}", format_coord(r, k));
            }
        }
    }
    out.push('}');
}

fn write_layout(elements: &[Element], k: u32, with_box: bool) -> String {
    let mut out = String::from("{\"layout\":[");
    for (i, el) in elements.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_element(&mut out, el, k, with_box);
    }
    out.push_str("]}");
    out
}

/// Deterministic wire text with coordinates truncated to `k` decimals.
pub fn serialize(elements: &[Element], k: u32) -> String {
    write_layout(elements, k, true)
}

/// The instruction-side skeleton: labels and content kept, boxes removed.
pub fn mask(elements: &[Element]) -> String {
    write_layout(elements, 0, false)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

fn schema(index: Option<usize>, message: impl Into<String>) -> CodecError {
    CodecError::Schema {
        index,
        message: message.into(),
    }
}

/// Decodes wire text. Unknown keys are ignored with a warning; integer and
/// float coordinate literals are both accepted.
pub fn parse(text: &str) -> Result<LayoutFragment, CodecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CodecError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    from_value(&value)
}

pub fn from_value(value: &Value) -> Result<LayoutFragment, CodecError> {
    let obj = value
        .as_object()
        .ok_or_else(|| schema(None, "top level must be an object"))?;
    let items = obj
        .get("layout")
        .ok_or_else(|| schema(None, "missing \"layout\" key"))?
        .as_array()
        .ok_or_else(|| schema(None, "\"layout\" must be an array"))?;

    let mut fragment = LayoutFragment::default();
    for key in obj.keys().filter(|k| k.as_str() != "layout") {
        fragment
            .warnings
            .push(format!("ignored top-level key \"{key}\""));
    }
    for (index, item) in items.iter().enumerate() {
        let at = Some(index);
        let item = item
            .as_object()
            .ok_or_else(|| schema(at, "element must be an object"))?;
        let label = item
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(at, "\"label\" must be a string"))?;
        let coords = item
            .get("box")
            .ok_or_else(|| schema(at, "missing \"box\""))?
            .as_array()
            .ok_or_else(|| schema(at, "\"box\" must be an array"))?;
        if coords.len() != 4 {
            return Err(schema(
                at,
                format!("\"box\" must hold 4 numbers, found {}", coords.len()),
            ));
        }
        let mut c = [0.0; 4];
        for (slot, v) in c.iter_mut().zip(coords) {
            *slot = v
                .as_f64()
                .ok_or_else(|| schema(at, "\"box\" entries must be numbers"))?;
        }
        let mut el = Element::new(label, NormBox::from_coords(c));
        if let Some(t) = item.get("text") {
            let t = t
                .as_str()
                .ok_or_else(|| schema(at, "\"text\" must be a string"))?;
            el.content = Content::Text(t.to_owned());
        } else if let Some(a) = item.get("asset") {
            let a = a
                .as_str()
                .ok_or_else(|| schema(at, "\"asset\" must be a string"))?;
            el.content = Content::Asset(a.to_owned());
        }
        if let Some(r) = item.get("rotation") {
            el.rotation_deg = Some(
                r.as_f64()
                    .ok_or_else(|| schema(at, "\"rotation\" must be a number"))?,
            );
        }
        for key in item.keys() {
            if !matches!(
                key.as_str(),
                "label" | "box" | "text" | "asset" | "rotation"
            ) {
                fragment
                    .warnings
                    .push(format!("element {index}: ignored key \"{key}\""));
            }
        }
        fragment.elements.push(el);
    }
    Ok(fragment)
}

/// A ready-to-send instruction plus what the answer must contain.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub text: String,
    pub image_ref: Option<String>,
    pub expected_n: usize,
    pub expected_labels: Vec<String>,
}

/// Fills the instruction template for a record whose boxes are to be predicted.
///
/// The background image travels separately as `image_ref`; the text holds
/// every other slot. An absent constraint text is rendered as `None`.
pub fn build_prompt(record: &LayoutRecord, constraints: Option<&str>) -> PromptBundle {
    let n = record.elements.len();
    let constraints = match constraints.map(str::trim) {
        Some(c) if !c.is_empty() => c,
        _ => "None",
    };
    let text = format!(
        "Please help me to place {n} foreground elements over the background of {res} to craft a {domain}. \
Remember to avoid unbalance, overlap, misalignment, and occlusion of semantic-meaningful objects on the background image. \
Return the result by filling in the following JSON file while keeping the number and types of elements unchanged. \
The initial JSON is defined as: {masked}, in which each design element is represented by a bounding box described as [left, top, right, bottom], \
and each coordinate is a contiguous number in 0-1. \
The user constraints are defined as: {constraints}, which should be adopted as compulsory design requirements.",
        res = record.canvas,
        domain = record.domain_tag,
        masked = mask(&record.elements),
    );
    PromptBundle {
        text,
        image_ref: record.background_ref.clone(),
        expected_n: n,
        expected_labels: record.labels(),
    }
}

/// The assistant turn of a training example.
pub fn answer_text(elements: &[Element], k: u32) -> String {
    format!("{ANSWER_PREFIX}{}.", serialize(elements, k))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepairAction {
    ClampedCoordinate {
        index: usize,
        field: String,
        from: f64,
        to: f64,
    },
    SwappedCorners {
        index: usize,
        axis: String,
    },
    DroppedExtraElement {
        index: usize,
        label: String,
    },
    /// A missing element has `received: None`.
    LabelMismatch {
        index: usize,
        expected: Option<String>,
        received: Option<String>,
    },
    FencedBlockExtracted,
}

impl RepairAction {
    pub fn kind(&self) -> &'static str {
        match self {
            RepairAction::ClampedCoordinate { .. } => "clamped-coordinate",
            RepairAction::SwappedCorners { .. } => "swapped-corners",
            RepairAction::DroppedExtraElement { .. } => "dropped-extra-element",
            RepairAction::LabelMismatch { .. } => "label-mismatch",
            RepairAction::FencedBlockExtracted => "fenced-block-extracted",
        }
    }

    pub fn index(&self) -> Option<usize> {
        match self {
            RepairAction::ClampedCoordinate { index, .. }
            | RepairAction::SwappedCorners { index, .. }
            | RepairAction::DroppedExtraElement { index, .. }
            | RepairAction::LabelMismatch { index, .. } => Some(*index),
            RepairAction::FencedBlockExtracted => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), Value::from(self.kind()));
        if let Some(i) = self.index() {
            obj.insert("index".into(), Value::from(i));
        }
        match self {
            RepairAction::ClampedCoordinate {
                field, from, to, ..
            } => {
                obj.insert("field".into(), Value::from(field.as_str()));
                obj.insert("from".into(), Value::from(*from));
                obj.insert("to".into(), Value::from(*to));
            }
            RepairAction::SwappedCorners { axis, .. } => {
                obj.insert("axis".into(), Value::from(axis.as_str()));
            }
            RepairAction::DroppedExtraElement { label, .. } => {
                obj.insert("label".into(), Value::from(label.as_str()));
            }
            RepairAction::LabelMismatch {
                expected, received, ..
            } => {
                obj.insert("expected".into(), expected.clone().into());
                obj.insert("received".into(), received.clone().into());
            }
            RepairAction::FencedBlockExtracted => {}
        }
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepairLog {
    pub actions: Vec<RepairAction>,
}

impl RepairLog {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.actions.iter().filter(|a| a.kind() == kind).count()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.actions.iter().map(RepairAction::to_json).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractPolicy {
    /// Reconciliation problems are repaired and logged.
    #[default]
    Lenient,
    /// Reconciliation problems are errors.
    Strict,
}

/// Byte range of the first balanced `{...}` starting at or after `from`.
fn balanced_object(text: &str, from: usize) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let start = from + text[from..].find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, i + 1));
                }
            }
            _ => {}
        }
    }
    None
}

/// Finds the first JSON object in free text, preferring one with a `layout` key.
///
/// Returns the parsed value and whether it sat inside a fenced code block.
pub fn find_json_object(text: &str) -> Option<(Value, bool)> {
    let mut first_any: Option<(Value, usize)> = None;
    let mut from = 0;
    while from < text.len() {
        let Some((start, end)) = balanced_object(text, from) else {
            // An unbalanced opening brace; try the next one.
            match text[from..].find('{') {
                Some(p) => {
                    from += p + 1;
                    continue;
                }
                None => break,
            }
        };
        if let Ok(v) = serde_json::from_str::<Value>(&text[start..end]) {
            if v.get("layout").is_some() {
                return Some((v, inside_fence(text, start)));
            }
            if first_any.is_none() {
                first_any = Some((v, start));
            }
            from = end;
        } else {
            from = start + 1;
        }
    }
    first_any.map(|(v, start)| (v, inside_fence(text, start)))
}

fn inside_fence(text: &str, pos: usize) -> bool {
    text[..pos].matches("```").count() % 2 == 1
}

/// Recovers a layout from raw model output and reconciles it with the request.
pub fn extract(
    model_output: &str,
    expected: &PromptBundle,
    policy: ExtractPolicy,
) -> Result<(LayoutFragment, RepairLog), CodecError> {
    let (value, fenced) = find_json_object(model_output).ok_or_else(|| CodecError::NoJson {
        raw: model_output.to_owned(),
    })?;
    let mut fragment = from_value(&value)?;
    let mut log = RepairLog::default();
    if fenced {
        log.actions.push(RepairAction::FencedBlockExtracted);
    }

    let report = layout::validate_elements(
        &mut fragment.elements,
        ValidationPolicy::Clamp,
        None::<&CategoryVocabulary>,
    )
    .expect("clamp policy never fails");
    for note in report.notes {
        match note.kind {
            FixKind::Clamped { from, to } => log.actions.push(RepairAction::ClampedCoordinate {
                index: note.index,
                field: note.field.to_string(),
                from,
                to,
            }),
            FixKind::Swapped => log.actions.push(RepairAction::SwappedCorners {
                index: note.index,
                axis: note.field.to_string(),
            }),
            FixKind::RotationWrapped { .. } | FixKind::UnknownCategory(_) => {}
        }
    }

    let received: Vec<String> = fragment
        .elements
        .iter()
        .map(|e| e.category.clone())
        .collect();
    let mut issues = Vec::new();
    for (index, el) in fragment
        .elements
        .iter()
        .enumerate()
        .skip(expected.expected_n)
    {
        issues.push(RepairAction::DroppedExtraElement {
            index,
            label: el.category.clone(),
        });
    }
    for index in 0..expected.expected_n {
        let want = expected.expected_labels.get(index);
        let got = received.get(index);
        if want != got {
            issues.push(RepairAction::LabelMismatch {
                index,
                expected: want.cloned(),
                received: got.cloned(),
            });
        }
    }
    if !issues.is_empty() && policy == ExtractPolicy::Strict {
        return Err(CodecError::Reconciliation {
            expected: expected.expected_labels.clone(),
            received,
        });
    }
    fragment.elements.truncate(expected.expected_n);
    log.actions.extend(issues);
    Ok((fragment, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn el(label: &str, b: [f64; 4]) -> Element {
        Element::new(label, NormBox::from_coords(b))
    }

    fn record(elements: Vec<Element>) -> LayoutRecord {
        LayoutRecord::new("r1", Canvas::new(800, 600).unwrap(), "commercial poster")
            .with_elements(elements)
    }

    #[test]
    fn serialize_examples() {
        assert_eq!(
            serialize(&[el("text", [0.1, 0.2, 0.9, 0.3])], 3),
            r#"{"layout":[{"label":"text","box":[0.1,0.2,0.9,0.3]}]}"#
        );
        assert_eq!(serialize(&[], 3), r#"{"layout":[]}"#);
        assert_eq!(
            serialize(&[el("text", [0.0, 0.0, 1.0, 1.0]).with_text("SALE")], 3),
            r#"{"layout":[{"label":"text","box":[0.0,0.0,1.0,1.0],"text":"SALE"}]}"#
        );
    }

    #[test]
    fn numbers_are_truncated_without_exponent() {
        assert_eq!(format_coord(0.123456, 3), "0.123");
        assert_eq!(format_coord(1e-9, 3), "0.0");
        assert_eq!(format_coord(0.5, 3), "0.5");
        assert_eq!(format_coord(-0.0, 3), "0.0");
        assert_eq!(format_coord(12.5, 1), "12.5");
    }

    #[test]
    fn parse_errors() {
        let err = parse(r#"{"layout":[{"label":"text","box":[0.1,0.2,0.3]}]}"#).unwrap_err();
        assert_eq!(
            err,
            CodecError::Schema {
                index: Some(0),
                message: "\"box\" must hold 4 numbers, found 3".into()
            }
        );
        match parse("{\"layout\": [1,\n  }").unwrap_err() {
            CodecError::Syntax { offset, .. } => assert!(offset > 10 && offset <= 19),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn parse_tolerates_extra_keys_and_integers() {
        let f =
            parse(r#"{"layout":[{"label":"logo","box":[0,0,1,1],"color":"red"}],"v":1}"#).unwrap();
        assert_eq!(f.elements[0].bbox, NormBox::FULL);
        assert_eq!(f.warnings.len(), 2);
    }

    #[test]
    fn mask_examples() {
        assert_eq!(
            mask(&[el("logo", [0.3, 0.1, 0.7, 0.2])]),
            r#"{"layout":[{"label":"logo"}]}"#
        );
        assert_eq!(
            mask(&[el("text", [0.0, 0.0, 1.0, 1.0]).with_text("SALE")]),
            r#"{"layout":[{"label":"text","text":"SALE"}]}"#
        );
        let raw = [el("logo", [0.12345, 0.1, 0.7, 0.2])];
        let quantized: Vec<Element> = raw
            .iter()
            .map(|e| Element {
                bbox: layout::quantize(e.bbox, 3),
                ..e.clone()
            })
            .collect();
        assert_eq!(mask(&raw), mask(&quantized));
    }

    #[test]
    fn prompt_substitutions() {
        let r = record(vec![
            el("text", [0.1, 0.1, 0.2, 0.2]),
            el("logo", [0.1, 0.1, 0.2, 0.2]),
        ]);
        let p = build_prompt(&r, None);
        assert!(p.text.starts_with("Please help me to place 2 foreground elements over the background of 800x600 to craft a commercial poster."));
        assert!(p
            .text
            .contains("The user constraints are defined as: None, which"));
        assert!(p
            .text
            .contains("each coordinate is a contiguous number in 0-1"));
        assert!(!p.text.contains('<'));
        assert_eq!(p.expected_n, 2);
        assert_eq!(p.expected_labels, vec!["text".to_string(), "logo".into()]);

        let p = build_prompt(&r, Some("the logo should be at the top"));
        assert!(p
            .text
            .contains("defined as: the logo should be at the top, which should"));

        let r3 = record(vec![el("text", [0.0; 4]); 3]);
        let p = build_prompt(&r3, None);
        let masked = mask(&r3.elements);
        assert_eq!(p.text.matches(&masked).count(), 1);
        assert_eq!(masked.matches("\"label\"").count(), 3);
    }

    fn bundle(labels: &[&str]) -> PromptBundle {
        PromptBundle {
            text: String::new(),
            image_ref: None,
            expected_n: labels.len(),
            expected_labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn extract_perfect_answer() {
        let els = vec![el("text", [0.1, 0.2, 0.9, 0.3])];
        let out = answer_text(&els, 3);
        let (f, log) = extract(&out, &bundle(&["text"]), ExtractPolicy::Strict).unwrap();
        assert_eq!(f.elements, els);
        assert!(log.is_empty());
    }

    #[test]
    fn extract_clamps_out_of_range() {
        let out = r#"Result: {"layout":[{"label":"text","box":[0.1,0.2,1.2,0.3]}]}"#;
        let (f, log) = extract(out, &bundle(&["text"]), ExtractPolicy::Lenient).unwrap();
        assert_eq!(f.elements[0].bbox.right, 1.0);
        assert_eq!(log.actions.len(), 1);
        assert_eq!(log.count("clamped-coordinate"), 1);
    }

    #[test]
    fn extract_drops_extras() {
        let els: Vec<Element> = [0.0, 0.2, 0.4, 0.6]
            .iter()
            .map(|&y| el("text", [0.1, y, 0.5, layout::quantize_value(y + 0.1, 3)]))
            .collect();
        let out = answer_text(&els, 3);
        let (f, log) = extract(
            &out,
            &bundle(&["text", "text", "text"]),
            ExtractPolicy::Lenient,
        )
        .unwrap();
        assert_eq!(f.elements, els[..3].to_vec());
        assert_eq!(log.actions.len(), 1);
        assert_eq!(
            log.actions[0],
            RepairAction::DroppedExtraElement {
                index: 3,
                label: "text".into()
            }
        );
        assert!(matches!(
            extract(
                &out,
                &bundle(&["text", "text", "text"]),
                ExtractPolicy::Strict
            ),
            Err(CodecError::Reconciliation { .. })
        ));
    }

    #[test]
    fn extract_keeps_model_order_on_permutation() {
        let els = vec![
            el("logo", [0.1, 0.1, 0.2, 0.2]),
            el("text", [0.3, 0.3, 0.4, 0.4]),
        ];
        let out = serialize(&els, 3);
        let (f, log) = extract(&out, &bundle(&["text", "logo"]), ExtractPolicy::Lenient).unwrap();
        assert_eq!(f.elements, els);
        assert_eq!(log.count("label-mismatch"), 2);
    }

    #[test]
    fn extract_reports_missing_elements() {
        let out = serialize(&[el("logo", [0.1, 0.1, 0.2, 0.2])], 3);
        let (f, log) = extract(&out, &bundle(&["logo", "text"]), ExtractPolicy::Lenient).unwrap();
        assert_eq!(f.elements.len(), 1);
        assert_eq!(
            log.actions,
            vec![RepairAction::LabelMismatch {
                index: 1,
                expected: Some("text".into()),
                received: None
            }]
        );
    }

    #[test]
    fn extract_handles_fences_and_noise() {
        let body = serialize(&[el("text", [0.1, 0.2, 0.9, 0.3])], 3);
        let out = alloc::format!("Here {{not json}} you go:\n```json\n{body}\n```\nEnjoy {{");
        let (f, log) = extract(&out, &bundle(&["text"]), ExtractPolicy::Lenient).unwrap();
        assert_eq!(f.elements.len(), 1);
        assert_eq!(log.actions, vec![RepairAction::FencedBlockExtracted]);
    }

    #[test]
    fn extract_without_json_fails_with_raw_text() {
        let err = extract("I cannot help.", &bundle(&[]), ExtractPolicy::Lenient).unwrap_err();
        assert_eq!(
            err,
            CodecError::NoJson {
                raw: "I cannot help.".into()
            }
        );
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_scanner() {
        let els = vec![el("text", [0.1, 0.2, 0.9, 0.3]).with_text("a } b { c \" }")];
        let out = alloc::format!("x {} y", serialize(&els, 3));
        let (f, _) = extract(&out, &bundle(&["text"]), ExtractPolicy::Strict).unwrap();
        assert_eq!(f.elements, els);
    }

    #[test]
    fn rotation_and_asset_round_trip() {
        let els = vec![el("object", [0.1, 0.2, 0.3, 0.4])
            .with_asset("img/7.png")
            .with_rotation(-12.5)];
        let text = serialize(&els, 3);
        assert_eq!(
            text,
            r#"{"layout":[{"label":"object","box":[0.1,0.2,0.3,0.4],"asset":"img/7.png","rotation":-12.5}]}"#
        );
        assert_eq!(parse(&text).unwrap().elements, els);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn element() -> impl Strategy<Value = Element> {
            (
                prop::sample::select(vec!["text", "logo", "underlay", "item title"]),
                prop::array::uniform4(0.0f64..=1.0),
                prop::option::of("[a-zA-Z0-9 \"{}\\\\]{0,12}"),
            )
                .prop_map(|(label, c, text)| {
                    let mut c = c.map(|v| layout::quantize_value(v, 3));
                    if c[0] > c[2] {
                        c.swap(0, 2);
                    }
                    if c[1] > c[3] {
                        c.swap(1, 3);
                    }
                    let e = Element::new(label, NormBox::from_coords(c));
                    match text {
                        Some(t) => e.with_text(t),
                        None => e,
                    }
                })
        }

        proptest! {
            #[test]
            fn parse_inverts_serialize(els in prop::collection::vec(element(), 0..20)) {
                let text = serialize(&els, 3);
                prop_assert_eq!(parse(&text).unwrap().elements, els);
            }

            #[test]
            fn mask_never_has_boxes(els in prop::collection::vec(element(), 0..10)) {
                prop_assert!(!mask(&els).contains("\"box\""));
            }

            #[test]
            fn extract_recovers_from_prose(
                els in prop::collection::vec(element(), 0..8),
                prefix in "[a-zA-Z .,:!\n]{0,40}",
                suffix in "[a-zA-Z .,:!\n]{0,40}",
            ) {
                let labels: Vec<&str> = els.iter().map(|e| e.category.as_str()).collect();
                let out = alloc::format!("{prefix}{}{suffix}", serialize(&els, 3));
                let (f, log) = extract(&out, &bundle(&labels), ExtractPolicy::Strict).unwrap();
                prop_assert_eq!(f.elements, els);
                prop_assert!(log.is_empty());
            }
        }
    }
}
