//! Dataset manifests: ingestion from several annotation shapes, the
//! canonical JSONL interchange, corpus statistics and seeded splitting.
//!
//! A manifest file is JSONL. The optional first line is a header
//! `{"manifest": name, "vocabulary": {...}}`; every other line is a row
//! `{"id", "canvas": [w, h], "background", "saliency", "elements": [...]}`
//! with normalized corner boxes and optional `"split"` and `"domain"` keys.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use posterkit_core::codec;
use posterkit_core::layout::{
    self, Canvas, CategoryVocabulary, Element, LayoutRecord, PixelRect, ValidationPolicy,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::io::{self, IoError};

/// Domain indicator used when neither the row nor the caller names one.
pub const DEFAULT_DOMAIN: &str = "poster";

/// Canvas assumed for posterlayout-style rows.
pub const POSTERLAYOUT_CANVAS: (u32, u32) = (513, 750);

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Vocabulary(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("manifest has no records")]
    EmptyManifest,
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Background and saliency paths live in the record, relative to the root.
    pub record: LayoutRecord,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub vocabulary: CategoryVocabulary,
    pub entries: Vec<ManifestEntry>,
    /// Directory that relative asset paths resolve against.
    pub root: PathBuf,
}

impl Manifest {
    pub fn new(name: impl Into<String>, vocabulary: CategoryVocabulary) -> Self {
        Manifest {
            name: name.into(),
            vocabulary,
            entries: Vec::new(),
            root: PathBuf::from("."),
        }
    }

    pub fn push(&mut self, record: LayoutRecord, split: Option<Split>) -> Result<(), DataError> {
        if self.get(&record.id).is_some() {
            return Err(DataError::DuplicateId(record.id));
        }
        self.entries.push(ManifestEntry { record, split });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.record.id == id)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Entries tagged `split`, or every entry when none carry a tag.
    pub fn select(&self, split: Option<Split>) -> Vec<&ManifestEntry> {
        match split {
            Some(s) if self.entries.iter().any(|e| e.split.is_some()) => {
                self.entries.iter().filter(|e| e.split == Some(s)).collect()
            }
            _ => self.entries.iter().collect(),
        }
    }

    /// Referenced background or saliency files that do not exist.
    pub fn missing_files(&self) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        for e in &self.entries {
            let refs = [&e.record.background_ref, &e.record.saliency_ref];
            for r in refs.into_iter().flatten() {
                let p = self.resolve(r);
                if !p.exists() {
                    out.push((e.record.id.clone(), p));
                }
            }
        }
        out
    }

    /// Canonical JSONL text with coordinates truncated to `k` decimals.
    pub fn to_jsonl(&self, k: u32) -> String {
        let header = json!({
            "manifest": self.name,
            "vocabulary": serde_json::to_value(&self.vocabulary).expect("vocabulary serializes"),
        });
        let mut out = header.to_string();
        out.push('\n');
        for e in &self.entries {
            out.push_str(&row_value(e, k).to_string());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path, k: u32) -> Result<(), DataError> {
        Ok(io::write_atomic(path, self.to_jsonl(k).as_bytes())?)
    }

    /// Loads a canonical manifest; any malformed row is an error.
    pub fn load(path: &Path) -> Result<Manifest, DataError> {
        let options = IngestOptions {
            strict: true,
            ..IngestOptions::default()
        };
        let (manifest, report) = ingest(path, Adapter::GenericJsonl, &options)?;
        if let Some(first) = report.errors.first() {
            return Err(DataError::Format {
                path: path.to_path_buf(),
                message: first.to_string(),
            });
        }
        Ok(manifest)
    }
}

fn row_value(e: &ManifestEntry, k: u32) -> Value {
    let r = &e.record;
    let wire: Value =
        serde_json::from_str(&codec::serialize(&r.elements, k)).expect("codec emits valid JSON");
    let mut row = Map::new();
    row.insert("id".into(), json!(r.id));
    row.insert(
        "canvas".into(),
        json!([r.canvas.width_px, r.canvas.height_px]),
    );
    row.insert("background".into(), json!(r.background_ref));
    row.insert("saliency".into(), json!(r.saliency_ref));
    row.insert("domain".into(), json!(r.domain_tag));
    if let Some(s) = e.split {
        row.insert("split".into(), json!(s.name()));
    }
    row.insert("elements".into(), wire["layout"].clone());
    Value::Object(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    GenericJsonl,
    CglStyle,
    PosterLayoutStyle,
    BannerStyle,
}

impl Adapter {
    pub const ALL: [Adapter; 4] = [
        Adapter::GenericJsonl,
        Adapter::CglStyle,
        Adapter::PosterLayoutStyle,
        Adapter::BannerStyle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Adapter::GenericJsonl => "generic-jsonl",
            Adapter::CglStyle => "cgl-style",
            Adapter::PosterLayoutStyle => "posterlayout-style",
            Adapter::BannerStyle => "banner-style",
        }
    }
}

impl FromStr for Adapter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Adapter::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown adapter `{s}`"))
    }
}

/// Raw annotation category (numeric id or name) to vocabulary label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTable {
    pub pairs: Vec<(String, String)>,
}

impl LabelTable {
    /// `key=label` per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=label", i + 1))?;
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        Ok(LabelTable { pairs })
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        LabelTable {
            pairs: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Distinct labels in table order. Labels named `underlay` or ending in
    /// `background` are treated as underlays.
    pub fn vocabulary(&self, name: &str) -> CategoryVocabulary {
        let mut labels: Vec<String> = Vec::new();
        for (_, v) in &self.pairs {
            if !labels.contains(v) {
                labels.push(v.clone());
            }
        }
        let underlays: Vec<String> = labels
            .iter()
            .filter(|l| *l == "underlay" || l.ends_with("background"))
            .cloned()
            .collect();
        CategoryVocabulary {
            name: name.to_owned(),
            labels,
            underlay_labels: underlays,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub name: Option<String>,
    pub vocabulary: Option<CategoryVocabulary>,
    pub label_table: Option<LabelTable>,
    /// Reject whole rows on element-level problems instead of dropping elements.
    pub strict: bool,
    pub domain: Option<String>,
    pub canvas: Option<Canvas>,
    /// Saliency maps named like the backgrounds, under this directory.
    pub saliency_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    /// 1-based line, CSV record or image index, depending on the adapter.
    pub row: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for RowIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "row {} ({id}): {}", self.row, self.message),
            None => write!(f, "row {}: {}", self.row, self.message),
        }
    }
}

/// Rows skipped (`errors`) and repairs applied to kept rows (`warnings`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub errors: Vec<RowIssue>,
    pub warnings: Vec<RowIssue>,
}

impl IngestReport {
    fn error(&mut self, row: usize, id: Option<&str>, message: impl Into<String>) {
        self.errors.push(RowIssue {
            row,
            id: id.map(str::to_owned),
            message: message.into(),
        });
    }

    fn warn(&mut self, row: usize, id: Option<&str>, message: impl Into<String>) {
        self.warnings.push(RowIssue {
            row,
            id: id.map(str::to_owned),
            message: message.into(),
        });
    }
}

/// Reads an annotation file through `adapter` into a manifest.
///
/// Malformed rows are skipped and listed in the report; only an unreadable
/// file or an adapter/vocabulary mismatch fails the whole call.
pub fn ingest(
    path: &Path,
    adapter: Adapter,
    options: &IngestOptions,
) -> Result<(Manifest, IngestReport), DataError> {
    let text = io::read_text(path)?;
    let root = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let default_name = path.file_stem().map_or_else(
        || "dataset".to_owned(),
        |s| s.to_string_lossy().into_owned(),
    );
    let mut ctx = Ctx {
        options,
        report: IngestReport::default(),
    };
    let mut manifest = match adapter {
        Adapter::GenericJsonl => ctx.generic(&text, &default_name)?,
        Adapter::CglStyle => ctx.cgl(&text, path, &default_name)?,
        Adapter::PosterLayoutStyle => ctx.posterlayout(&text, path, &default_name)?,
        Adapter::BannerStyle => ctx.banner(&text, &default_name)?,
    };
    manifest.root = root;
    Ok((manifest, ctx.report))
}

struct Ctx<'a> {
    options: &'a IngestOptions,
    report: IngestReport,
}

/// Raw category key as written in an annotation: a number or a name.
fn category_key(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn saliency_for(dir: &Option<String>, background: &str) -> Option<String> {
    let dir = dir.as_ref()?;
    let file = Path::new(background).file_name()?;
    Some(Path::new(dir).join(file).to_string_lossy().into_owned())
}

impl Ctx<'_> {
    fn domain(&self, fallback: &str) -> String {
        self.options
            .domain
            .clone()
            .unwrap_or_else(|| fallback.to_owned())
    }

    /// Label checks plus clamp validation; `None` when the row is rejected.
    fn finish(
        &mut self,
        row: usize,
        mut record: LayoutRecord,
        vocab: &CategoryVocabulary,
        unmapped: Vec<String>,
    ) -> Option<LayoutRecord> {
        let id = record.id.clone();
        let id = Some(id.as_str());
        let mut problems = unmapped;
        let before = record.elements.len();
        record.elements.retain(|e| vocab.contains(&e.category));
        if record.elements.len() != before {
            problems.push(format!(
                "{} element(s) with labels outside vocabulary `{}`",
                before - record.elements.len(),
                vocab.name
            ));
        }
        if !problems.is_empty() {
            if self.options.strict {
                self.report.error(row, id, problems.join("; "));
                return None;
            }
            for p in problems {
                self.report.warn(row, id, format!("dropped {p}"));
            }
        }
        let (record, fixes) = layout::validate(&record, ValidationPolicy::Clamp, None)
            .expect("clamp policy never fails");
        for note in fixes.notes {
            self.report.warn(
                row,
                id,
                format!("element {} {}: {:?}", note.index, note.field, note.kind),
            );
        }
        Some(record)
    }

    fn admit(
        &mut self,
        manifest: &mut Manifest,
        row: usize,
        record: LayoutRecord,
        split: Option<Split>,
    ) {
        let id = record.id.clone();
        if let Err(e) = manifest.push(record, split) {
            self.report.error(row, Some(&id), e.to_string());
        }
    }

    fn generic(&mut self, text: &str, default_name: &str) -> Result<Manifest, DataError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let mut name = self.options.name.clone();
        let mut vocab = self.options.vocabulary.clone();
        if let Some((_, first)) = lines.peek() {
            if let Ok(Value::Object(h)) = serde_json::from_str::<Value>(first) {
                if h.contains_key("manifest") {
                    if name.is_none() {
                        name = h["manifest"].as_str().map(str::to_owned);
                    }
                    if vocab.is_none() {
                        if let Some(v) = h.get("vocabulary") {
                            vocab = Some(serde_json::from_value(v.clone()).map_err(|e| {
                                DataError::Vocabulary(format!("header vocabulary: {e}"))
                            })?);
                        }
                    }
                    lines.next();
                }
            }
        }

        let mut rows = Vec::new();
        for (i, line) in lines {
            self.report.rows_read += 1;
            match parse_generic_row(line, &self.domain(DEFAULT_DOMAIN)) {
                Ok(r) => rows.push((i + 1, r)),
                Err((id, msg)) => self.report.error(i + 1, id.as_deref(), msg),
            }
        }

        let vocab = match vocab {
            Some(v) => v,
            None => infer_vocabulary(
                name.as_deref().unwrap_or(default_name),
                rows.iter().map(|(_, r)| &r.0),
            ),
        };
        vocab
            .check()
            .map_err(|e| DataError::Vocabulary(e.to_string()))?;
        let mut manifest = Manifest::new(
            name.unwrap_or_else(|| default_name.to_owned()),
            vocab.clone(),
        );
        for (row, (record, split)) in rows {
            if let Some(r) = self.finish(row, record, &vocab, Vec::new()) {
                self.admit(&mut manifest, row, r, split);
            }
        }
        Ok(manifest)
    }

    fn cgl(&mut self, text: &str, path: &Path, default_name: &str) -> Result<Manifest, DataError> {
        #[derive(Deserialize)]
        struct Coco {
            images: Vec<CocoImage>,
            #[serde(default)]
            annotations: Vec<Value>,
            #[serde(default)]
            categories: Vec<CocoCategory>,
        }
        #[derive(Deserialize)]
        struct CocoImage {
            id: Value,
            file_name: String,
            width: u32,
            height: u32,
        }
        #[derive(Deserialize)]
        struct CocoCategory {
            id: Value,
            name: String,
        }

        let coco: Coco = serde_json::from_str(text).map_err(|e| DataError::Format {
            path: path.to_path_buf(),
            message: format!("not a COCO-style annotation file: {e}"),
        })?;
        let vocab = self
            .options
            .vocabulary
            .clone()
            .unwrap_or_else(CategoryVocabulary::cgl);
        let table = match &self.options.label_table {
            Some(t) => t.clone(),
            None => {
                let named: Vec<(String, String)> = coco
                    .categories
                    .iter()
                    .filter_map(|c| {
                        let name = c.name.to_lowercase();
                        Some((category_key(&c.id)?, name))
                    })
                    .filter(|(_, n)| vocab.contains(n))
                    .collect();
                if named.is_empty() {
                    LabelTable::from_pairs([
                        ("1", "logo"),
                        ("2", "text"),
                        ("3", "underlay"),
                        ("4", "embellishment"),
                    ])
                } else {
                    LabelTable { pairs: named }
                }
            }
        };
        check_table(&table, &vocab)?;

        let mut by_image: HashMap<String, Vec<(usize, Value)>> = HashMap::new();
        for (i, ann) in coco.annotations.into_iter().enumerate() {
            match ann.get("image_id").and_then(category_key) {
                Some(k) => by_image.entry(k).or_default().push((i + 1, ann)),
                None => self
                    .report
                    .error(i + 1, None, "annotation without image_id"),
            }
        }

        let mut manifest = Manifest::new(
            self.options
                .name
                .clone()
                .unwrap_or_else(|| default_name.to_owned()),
            vocab.clone(),
        );
        let domain = self.domain("commercial poster");
        let known: BTreeSet<String> = coco
            .images
            .iter()
            .filter_map(|im| category_key(&im.id))
            .collect();
        for (idx, image) in coco.images.iter().enumerate() {
            let row = idx + 1;
            self.report.rows_read += 1;
            let Some(key) = category_key(&image.id) else {
                self.report
                    .error(row, None, "image id must be a number or string");
                continue;
            };
            let id = Path::new(&image.file_name)
                .file_stem()
                .map_or_else(|| key.clone(), |s| s.to_string_lossy().into_owned());
            let canvas = match Canvas::new(image.width, image.height) {
                Ok(c) => c,
                Err(e) => {
                    self.report.error(row, Some(&id), e.to_string());
                    continue;
                }
            };
            let mut elements = Vec::new();
            let mut unmapped = Vec::new();
            let mut broken = None;
            for (ann_row, ann) in by_image.remove(&key).unwrap_or_default() {
                let bbox = ann
                    .get("bbox")
                    .and_then(|b| serde_json::from_value::<[f64; 4]>(b.clone()).ok());
                let cat = ann.get("category_id").and_then(category_key);
                match (bbox, cat) {
                    (Some([x, y, w, h]), Some(cat)) => match table.get(&cat) {
                        Some(label) => {
                            let nb = layout::normalize(PixelRect::from_xywh(x, y, w, h), canvas)
                                .expect("canvas checked");
                            elements.push(Element::new(label, nb));
                        }
                        None => unmapped.push(format!(
                            "annotation {ann_row} with unknown category `{cat}`"
                        )),
                    },
                    _ => {
                        broken = Some(format!(
                            "annotation {ann_row} lacks a numeric bbox or category_id"
                        ))
                    }
                }
            }
            if let Some(msg) = broken {
                self.report.error(row, Some(&id), msg);
                continue;
            }
            let mut record = LayoutRecord::new(id, canvas, domain.clone()).with_elements(elements);
            record.saliency_ref = saliency_for(&self.options.saliency_dir, &image.file_name);
            record.background_ref = Some(image.file_name.clone());
            if let Some(r) = self.finish(row, record, &vocab, unmapped) {
                self.admit(&mut manifest, row, r, None);
            }
        }
        let mut orphans: Vec<_> = by_image
            .into_iter()
            .filter(|(k, _)| !known.contains(k))
            .collect();
        orphans.sort_by_key(|(_, anns)| anns[0].0);
        for (k, anns) in orphans {
            self.report.error(
                anns[0].0,
                None,
                format!("annotations reference unknown image `{k}`"),
            );
        }
        Ok(manifest)
    }

    fn posterlayout(
        &mut self,
        text: &str,
        path: &Path,
        default_name: &str,
    ) -> Result<Manifest, DataError> {
        let vocab = self
            .options
            .vocabulary
            .clone()
            .unwrap_or_else(CategoryVocabulary::posterlayout);
        let table = self.options.label_table.clone().unwrap_or_else(|| {
            LabelTable::from_pairs([("1", "text"), ("2", "logo"), ("3", "underlay")])
        });
        check_table(&table, &vocab)?;
        let canvas = match self.options.canvas {
            Some(c) => c,
            None => {
                Canvas::new(POSTERLAYOUT_CANVAS.0, POSTERLAYOUT_CANVAS.1).expect("valid default")
            }
        };

        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| DataError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| DataError::Format {
                    path: path.to_path_buf(),
                    message: format!("missing column `{name}`"),
                })
        };
        let (c_path, c_cls, c_box) = (col("poster_path")?, col("cls_elem")?, col("box_elem")?);

        // Rows are elements; group them by poster in first-seen order.
        struct Poster {
            row: usize,
            path: String,
            elements: Vec<Element>,
            unmapped: Vec<String>,
            broken: Option<String>,
        }
        let mut posters: Vec<Poster> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    self.report.error(row, None, e.to_string());
                    continue;
                }
            };
            let Some(poster) = rec.get(c_path).map(str::trim).filter(|p| !p.is_empty()) else {
                self.report.error(row, None, "empty poster_path");
                continue;
            };
            let slot = *index.entry(poster.to_owned()).or_insert_with(|| {
                posters.push(Poster {
                    row,
                    path: poster.to_owned(),
                    elements: Vec::new(),
                    unmapped: Vec::new(),
                    broken: None,
                });
                posters.len() - 1
            });
            let p = &mut posters[slot];
            let cls = rec.get(c_cls).map(str::trim).unwrap_or_default();
            let bbox = rec
                .get(c_box)
                .and_then(|b| serde_json::from_str::<[f64; 4]>(b.trim()).ok());
            match (table.get(cls), bbox) {
                (_, None) => p.broken = Some(format!("CSV record {row}: unreadable box_elem")),
                (None, _) => p
                    .unmapped
                    .push(format!("CSV record {row} with unknown class `{cls}`")),
                (Some(label), Some([l, t, r, b])) => {
                    let nb = layout::normalize(PixelRect::new(l, t, r, b), canvas)
                        .expect("canvas checked");
                    p.elements.push(Element::new(label, nb));
                }
            }
        }

        let mut manifest = Manifest::new(
            self.options
                .name
                .clone()
                .unwrap_or_else(|| default_name.to_owned()),
            vocab.clone(),
        );
        let domain = self.domain(DEFAULT_DOMAIN);
        self.report.rows_read += posters.len();
        for p in posters {
            let id = Path::new(&p.path)
                .file_stem()
                .map_or_else(|| p.path.clone(), |s| s.to_string_lossy().into_owned());
            if let Some(msg) = p.broken {
                self.report.error(p.row, Some(&id), msg);
                continue;
            }
            let mut record =
                LayoutRecord::new(id, canvas, domain.clone()).with_elements(p.elements);
            record.saliency_ref = saliency_for(&self.options.saliency_dir, &p.path);
            record.background_ref = Some(p.path);
            if let Some(r) = self.finish(p.row, record, &vocab, p.unmapped) {
                self.admit(&mut manifest, p.row, r, None);
            }
        }
        Ok(manifest)
    }

    fn banner(&mut self, text: &str, default_name: &str) -> Result<Manifest, DataError> {
        let table = self.options.label_table.clone().ok_or_else(|| {
            DataError::Vocabulary("banner-style ingestion needs a label table".into())
        })?;
        let name = self
            .options
            .name
            .clone()
            .unwrap_or_else(|| default_name.to_owned());
        let vocab = self
            .options
            .vocabulary
            .clone()
            .unwrap_or_else(|| table.vocabulary(&name));
        check_table(&table, &vocab)?;
        let domain = self.domain("advertising banner");
        let mut manifest = Manifest::new(name, vocab.clone());
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = i + 1;
            self.report.rows_read += 1;
            match parse_banner_row(line, &table, &domain, &self.options.saliency_dir) {
                Ok((record, unmapped)) => {
                    if let Some(r) = self.finish(row, record, &vocab, unmapped) {
                        self.admit(&mut manifest, row, r, None);
                    }
                }
                Err((id, msg)) => self.report.error(row, id.as_deref(), msg),
            }
        }
        Ok(manifest)
    }
}

fn check_table(table: &LabelTable, vocab: &CategoryVocabulary) -> Result<(), DataError> {
    vocab
        .check()
        .map_err(|e| DataError::Vocabulary(e.to_string()))?;
    match table.pairs.iter().find(|(_, v)| !vocab.contains(v)) {
        Some((k, v)) => Err(DataError::Vocabulary(format!(
            "label table maps `{k}` to `{v}`, which vocabulary `{}` does not contain",
            vocab.name
        ))),
        None => Ok(()),
    }
}

fn infer_vocabulary<'a>(
    name: &str,
    records: impl Iterator<Item = &'a LayoutRecord>,
) -> CategoryVocabulary {
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        for e in &r.elements {
            if !labels.contains(&e.category) {
                labels.push(e.category.clone());
            }
        }
    }
    let underlays: Vec<String> = labels
        .iter()
        .filter(|l| *l == "underlay" || *l == "text background")
        .cloned()
        .collect();
    CategoryVocabulary {
        name: name.to_owned(),
        labels,
        underlay_labels: underlays,
    }
}

type RowResult<T> = Result<T, (Option<String>, String)>;

fn parse_generic_row(line: &str, default_domain: &str) -> RowResult<(LayoutRecord, Option<Split>)> {
    let v: Value = serde_json::from_str(line).map_err(|e| (None, format!("invalid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or((None, "row must be an object".to_owned()))?;
    let id = obj
        .get("id")
        .and_then(category_key)
        .ok_or((None, "missing \"id\"".to_owned()))?;
    let fail = |m: String| (Some(id.clone()), m);
    let [w, h] = obj
        .get("canvas")
        .and_then(|c| serde_json::from_value::<[u32; 2]>(c.clone()).ok())
        .ok_or_else(|| fail("\"canvas\" must be [width, height]".into()))?;
    let canvas = Canvas::new(w, h).map_err(|e| fail(e.to_string()))?;
    let elements = obj
        .get("elements")
        .ok_or_else(|| fail("missing \"elements\"".into()))?;
    let fragment =
        codec::from_value(&json!({ "layout": elements })).map_err(|e| fail(e.to_string()))?;
    let opt_str = |key: &str| -> RowResult<Option<String>> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(fail(format!("\"{key}\" must be a string or null"))),
        }
    };
    let split = match opt_str("split")? {
        Some(s) => Some(s.parse::<Split>().map_err(fail)?),
        None => None,
    };
    let domain = opt_str("domain")?.unwrap_or_else(|| default_domain.to_owned());
    let mut record = LayoutRecord::new(id.clone(), canvas, domain).with_elements(fragment.elements);
    record.background_ref = opt_str("background")?;
    record.saliency_ref = opt_str("saliency")?;
    Ok((record, split))
}

fn parse_banner_row(
    line: &str,
    table: &LabelTable,
    domain: &str,
    saliency_dir: &Option<String>,
) -> RowResult<(LayoutRecord, Vec<String>)> {
    #[derive(Deserialize)]
    struct Row {
        id: Option<Value>,
        image: String,
        width: u32,
        height: u32,
        #[serde(default)]
        elements: Vec<BannerElement>,
    }
    #[derive(Deserialize)]
    struct BannerElement {
        category: Value,
        bbox: [f64; 4],
        #[serde(default)]
        text: Option<String>,
    }
    let row: Row = serde_json::from_str(line).map_err(|e| (None, format!("malformed row: {e}")))?;
    let id = row.id.as_ref().and_then(category_key).unwrap_or_else(|| {
        Path::new(&row.image)
            .file_stem()
            .map_or_else(|| row.image.clone(), |s| s.to_string_lossy().into_owned())
    });
    let canvas =
        Canvas::new(row.width, row.height).map_err(|e| (Some(id.clone()), e.to_string()))?;
    let mut elements = Vec::new();
    let mut unmapped = Vec::new();
    for (j, e) in row.elements.into_iter().enumerate() {
        let key = category_key(&e.category).unwrap_or_default();
        let Some(label) = table.get(&key) else {
            unmapped.push(format!("element {j} with unknown category `{key}`"));
            continue;
        };
        let [x, y, w, h] = e.bbox;
        let nb =
            layout::normalize(PixelRect::from_xywh(x, y, w, h), canvas).expect("canvas checked");
        let mut el = Element::new(label, nb);
        if let Some(t) = e.text {
            el = el.with_text(t);
        }
        elements.push(el);
    }
    let mut record = LayoutRecord::new(id, canvas, domain).with_elements(elements);
    record.saliency_ref = saliency_for(saliency_dir, &row.image);
    record.background_ref = Some(row.image);
    Ok((record, unmapped))
}

/// Counts behind the dataset overview table and the element-count histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub name: String,
    pub records: usize,
    /// Keys `train`, `test` and `unassigned`.
    pub per_split: BTreeMap<String, usize>,
    pub classes: usize,
    pub total_boxes: usize,
    pub boxes_per_image: f64,
    pub per_category: BTreeMap<String, usize>,
    /// Element count to number of layouts with that count.
    pub histogram: BTreeMap<usize, usize>,
}

pub fn stats(manifest: &Manifest) -> Result<CorpusStats, DataError> {
    if manifest.is_empty() {
        return Err(DataError::EmptyManifest);
    }
    let mut per_split: BTreeMap<String, usize> = ["train", "test", "unassigned"]
        .into_iter()
        .map(|k| (k.to_owned(), 0))
        .collect();
    let mut per_category = BTreeMap::new();
    let mut histogram = BTreeMap::new();
    let mut total_boxes = 0;
    for e in &manifest.entries {
        let key = e.split.map_or("unassigned", Split::name);
        *per_split.get_mut(key).expect("preset key") += 1;
        let n = e.record.elements.len();
        total_boxes += n;
        *histogram.entry(n).or_insert(0) += 1;
        for el in &e.record.elements {
            *per_category.entry(el.category.clone()).or_insert(0) += 1;
        }
    }
    Ok(CorpusStats {
        name: manifest.name.clone(),
        records: manifest.len(),
        per_split,
        classes: manifest.vocabulary.labels.len(),
        total_boxes,
        boxes_per_image: total_boxes as f64 / manifest.len() as f64,
        per_category,
        histogram,
    })
}

impl CorpusStats {
    pub fn to_json(&self) -> Value {
        json!({
            "dataset": self.name,
            "records": self.records,
            "splits": self.per_split,
            "classes": self.classes,
            "total_boxes": self.total_boxes,
            "boxes_per_image": self.boxes_per_image,
            "per_category": self.per_category,
            "histogram": self.histogram.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        })
    }

    /// Aligned overview row followed by per-category and histogram sections.
    pub fn to_table(&self) -> String {
        let headers = [
            "Dataset",
            "Train",
            "Test",
            "Classes",
            "Boxes/img",
            "Total Boxes",
        ];
        let cells = [
            self.name.clone(),
            self.per_split["train"].to_string(),
            self.per_split["test"].to_string(),
            self.classes.to_string(),
            format!("{:.2}", self.boxes_per_image),
            self.total_boxes.to_string(),
        ];
        let mut out = aligned(&[headers.map(str::to_owned).to_vec(), cells.to_vec()]);
        if self.per_split["unassigned"] > 0 {
            out.push_str(&format!(
                "unassigned records: {}\n",
                self.per_split["unassigned"]
            ));
        }
        out.push('\n');
        let mut cats = vec![vec!["Category".to_owned(), "Boxes".to_owned()]];
        cats.extend(
            self.per_category
                .iter()
                .map(|(k, v)| vec![k.clone(), v.to_string()]),
        );
        out.push_str(&aligned(&cats));
        out.push('\n');
        let mut hist = vec![vec!["Elements".to_owned(), "Layouts".to_owned()]];
        hist.extend(
            self.histogram
                .iter()
                .map(|(k, v)| vec![k.to_string(), v.to_string()]),
        );
        out.push_str(&aligned(&hist));
        out
    }
}

/// Left-aligned columns separated by two spaces.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Tags every entry train or test. The train count is `ceil(ratio * n)`;
/// the assignment depends only on the ids and the seed.
pub fn split(manifest: &Manifest, ratio: f64, seed: u64) -> Result<Manifest, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    let n = manifest.len();
    // The epsilon keeps e.g. 0.9 * 10 from rounding up to 10.
    let n_train = ((ratio * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        manifest.entries[a]
            .record
            .id
            .cmp(&manifest.entries[b].record.id)
    });
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = manifest.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.entries[i].split = Some(if rank < n_train {
            Split::Train
        } else {
            Split::Test
        });
    }
    Ok(out)
}
