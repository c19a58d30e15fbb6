//! Machine-checkable design constraints.
//!
//! One constraint per line:
//!
//! ```text
//! PLACE <sel> AT top|bottom|left|right|center [BAND <f>]
//! <sel> ABOVE|BELOW|LEFT OF|RIGHT OF|INSIDE <sel>
//! <sel> LARGER THAN|SMALLER THAN <sel>
//! COUNT <category> =|<=|>= <n>
//! ALIGN <axis> <sel>, <sel>[, ...] [TOL <f>]
//! ```
//!
//! A selector is a category label (quote labels containing spaces, e.g.
//! `"item logo"`) or `#i` for the element at index `i`. Keywords are
//! case-insensitive. A constraint whose selectors match nothing is
//! inapplicable and does not count toward the violation ratio.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::codec::format_coord;
use crate::layout::{AlignAxis, Element, NormBox};

pub const DEFAULT_BAND: f64 = 0.33;
pub const DEFAULT_ALIGN_TOLERANCE: f64 = 0.01;
/// Slack on edge comparisons for relations.
pub const EDGE_TOLERANCE: f64 = 1e-6;
/// Minimum gap between groups for synthesized relations.
pub const SYNTH_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selector {
    Label(String),
    Index(usize),
}

impl Selector {
    fn select<'a>(&self, elements: &'a [Element]) -> Vec<&'a Element> {
        match self {
            Selector::Label(l) => elements.iter().filter(|e| &e.category == l).collect(),
            Selector::Index(i) => elements.get(*i).into_iter().collect(),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Index(i) => write!(f, "#{i}"),
            Selector::Label(l) if needs_quotes(l) => write!(f, "\"{l}\""),
            Selector::Label(l) => f.write_str(l),
        }
    }
}

fn needs_quotes(label: &str) -> bool {
    label.is_empty()
        || label.starts_with('#')
        || label
            .chars()
            .any(|c| c.is_whitespace() || c == ',' || c == '"')
        || is_keyword(label)
}

fn is_keyword(word: &str) -> bool {
    const KEYWORDS: [&str; 14] = [
        "place", "at", "band", "count", "align", "tol", "above", "below", "left", "right",
        "inside", "larger", "smaller", "than",
    ];
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Top,
    Bottom,
    Left,
    Right,
    Center,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Top,
        Region::Bottom,
        Region::Left,
        Region::Right,
        Region::Center,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Top => "top",
            Region::Bottom => "bottom",
            Region::Left => "left",
            Region::Right => "right",
            Region::Center => "center",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Region::ALL.into_iter().find(|r| {
            r.name().eq_ignore_ascii_case(s)
                || (s.eq_ignore_ascii_case("centre") && *r == Region::Center)
        })
    }

    /// Whether a centroid lies in the band of this region.
    pub fn contains(self, band: f64, (cx, cy): (f64, f64)) -> bool {
        const EPS: f64 = 1e-9;
        match self {
            Region::Top => cy <= band + EPS,
            Region::Bottom => cy >= 1.0 - band - EPS,
            Region::Left => cx <= band + EPS,
            Region::Right => cx >= 1.0 - band - EPS,
            Region::Center => {
                (cx - 0.5).abs() <= band / 2.0 + EPS && (cy - 0.5).abs() <= band / 2.0 + EPS
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Above,
    Below,
    LeftOf,
    RightOf,
    Inside,
}

impl Relation {
    fn keyword(self) -> &'static str {
        match self {
            Relation::Above => "ABOVE",
            Relation::Below => "BELOW",
            Relation::LeftOf => "LEFT OF",
            Relation::RightOf => "RIGHT OF",
            Relation::Inside => "INSIDE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeRelation {
    LargerThan,
    SmallerThan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Le,
    Ge,
}

impl Comparator {
    fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "=" | "==" => Some(Comparator::Eq),
            "<=" | "≤" => Some(Comparator::Le),
            ">=" | "≥" => Some(Comparator::Ge),
            _ => None,
        }
    }

    fn holds(self, lhs: usize, rhs: usize) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    Region {
        target: Selector,
        region: Region,
        band: f64,
    },
    Relation {
        relation: Relation,
        a: Selector,
        b: Selector,
    },
    SizeRel {
        relation: SizeRelation,
        a: Selector,
        b: Selector,
    },
    Count {
        category: String,
        comparator: Comparator,
        n: usize,
    },
    AlignGroup {
        axis: AlignAxis,
        members: Vec<Selector>,
        tolerance: f64,
    },
}

impl ConstraintKind {
    /// Canonical grammar line.
    pub fn to_line(&self) -> String {
        match self {
            ConstraintKind::Region {
                target,
                region,
                band,
            } => {
                let mut s = format!("PLACE {target} AT {}", region.name());
                if *band != DEFAULT_BAND {
                    s.push_str(&format!(" BAND {}", format_coord(*band, 6)));
                }
                s
            }
            ConstraintKind::Relation { relation, a, b } => {
                format!("{a} {} {b}", relation.keyword())
            }
            ConstraintKind::SizeRel { relation, a, b } => {
                let kw = match relation {
                    SizeRelation::LargerThan => "LARGER THAN",
                    SizeRelation::SmallerThan => "SMALLER THAN",
                };
                format!("{a} {kw} {b}")
            }
            ConstraintKind::Count {
                category,
                comparator,
                n,
            } => format!(
                "COUNT {} {} {n}",
                Selector::Label(category.clone()),
                comparator.symbol()
            ),
            ConstraintKind::AlignGroup {
                axis,
                members,
                tolerance,
            } => {
                let list: Vec<String> = members.iter().map(ToString::to_string).collect();
                let mut s = format!("ALIGN {} {}", axis.name(), list.join(", "));
                if *tolerance != DEFAULT_ALIGN_TOLERANCE {
                    s.push_str(&format!(" TOL {}", format_coord(*tolerance, 6)));
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub surface_text: String,
}

impl Constraint {
    /// Wraps a structured constraint with its canonical line as surface text.
    pub fn from_kind(kind: ConstraintKind) -> Self {
        Constraint {
            surface_text: kind.to_line(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConstraintParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ConstraintParseError> {
    let err = |column, message: &str| ConstraintParseError {
        line: 1,
        column,
        message: message.into(),
    };
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == ',' {
            out.push((Tok::Comma, column));
            i += 1;
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(err(column, "unterminated quote"));
            }
            out.push((Tok::Quoted(chars[start..j].iter().collect()), column));
            i = j + 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != ',' && chars[i] != '"'
            {
                i += 1;
            }
            out.push((Tok::Word(chars[start..i].iter().collect()), column));
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Cursor {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ConstraintParseError> {
        Err(ConstraintParseError {
            line: 1,
            column: self.col(),
            message: message.into(),
        })
    }

    fn peek_word(&self) -> Option<&str> {
        match self.toks.get(self.pos) {
            Some((Tok::Word(w), _)) => Some(w),
            _ => None,
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if self.peek_word().is_some_and(|w| w.eq_ignore_ascii_case(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ConstraintParseError> {
        if self.keyword(kw) {
            Ok(())
        } else {
            self.fail(format!("expected {kw}"))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, ConstraintParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Word(w), _)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn selector(&mut self) -> Result<Selector, ConstraintParseError> {
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Quoted(q), _)) => {
                self.pos += 1;
                Ok(Selector::Label(q))
            }
            Some((Tok::Word(w), _)) => {
                if let Some(rest) = w.strip_prefix('#') {
                    match rest.parse() {
                        Ok(i) => {
                            self.pos += 1;
                            Ok(Selector::Index(i))
                        }
                        Err(_) => self.fail("expected an element index after #"),
                    }
                } else if is_keyword(&w) {
                    self.fail(format!("expected a selector, found keyword {w}"))
                } else {
                    self.pos += 1;
                    Ok(Selector::Label(w))
                }
            }
            _ => self.fail("expected a selector"),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ConstraintParseError> {
        let col = self.col();
        let w = self.word(what)?;
        w.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(ConstraintParseError {
                line: 1,
                column: col,
                message: format!("expected {what}, found {w}"),
            })
    }

    fn finish(&self) -> Result<(), ConstraintParseError> {
        if self.pos < self.toks.len() {
            self.fail("unexpected trailing input")
        } else {
            Ok(())
        }
    }
}

/// Parses one grammar line; the surface text is the trimmed input.
pub fn parse(line: &str) -> Result<Constraint, ConstraintParseError> {
    let toks = tokenize(line)?;
    let mut c = Cursor {
        toks,
        pos: 0,
        end_col: line.chars().count() + 1,
    };
    if c.toks.is_empty() {
        return c.fail("empty constraint");
    }
    let kind = if c.keyword("place") {
        let target = c.selector()?;
        c.expect_keyword("at")?;
        let col = c.col();
        let name = c.word("a region")?;
        let region = Region::from_name(&name).ok_or(ConstraintParseError {
            line: 1,
            column: col,
            message: format!("unknown region {name}"),
        })?;
        let band = if c.keyword("band") {
            let col = c.col();
            let b = c.number("a band fraction")?;
            if !(b > 0.0 && b <= 0.5) {
                return Err(ConstraintParseError {
                    line: 1,
                    column: col,
                    message: "band fraction must lie in (0, 0.5]".into(),
                });
            }
            b
        } else {
            DEFAULT_BAND
        };
        ConstraintKind::Region {
            target,
            region,
            band,
        }
    } else if c.keyword("count") {
        let category = match c.selector()? {
            Selector::Label(l) => l,
            Selector::Index(_) => return c.fail("COUNT takes a category label"),
        };
        let col = c.col();
        let sym = c.word("a comparator")?;
        let comparator = Comparator::from_symbol(&sym).ok_or(ConstraintParseError {
            line: 1,
            column: col,
            message: format!("unknown comparator {sym}"),
        })?;
        let col = c.col();
        let n_text = c.word("a count")?;
        let n = n_text.parse().map_err(|_| ConstraintParseError {
            line: 1,
            column: col,
            message: format!("expected a count, found {n_text}"),
        })?;
        ConstraintKind::Count {
            category,
            comparator,
            n,
        }
    } else if c.keyword("align") {
        let col = c.col();
        let name = c.word("an axis")?;
        let axis = AlignAxis::from_name(&name).ok_or(ConstraintParseError {
            line: 1,
            column: col,
            message: format!("unknown axis {name}"),
        })?;
        let mut members = alloc::vec![c.selector()?];
        while matches!(c.toks.get(c.pos), Some((Tok::Comma, _))) {
            c.pos += 1;
            members.push(c.selector()?);
        }
        let tolerance = if c.keyword("tol") {
            let col = c.col();
            let t = c.number("a tolerance")?;
            if t < 0.0 {
                return Err(ConstraintParseError {
                    line: 1,
                    column: col,
                    message: "tolerance must be non-negative".into(),
                });
            }
            t
        } else {
            DEFAULT_ALIGN_TOLERANCE
        };
        ConstraintKind::AlignGroup {
            axis,
            members,
            tolerance,
        }
    } else {
        let a = c.selector()?;
        let kind_col = c.col();
        enum Op {
            Rel(Relation),
            Size(SizeRelation),
        }
        let op = if c.keyword("above") {
            Op::Rel(Relation::Above)
        } else if c.keyword("below") {
            Op::Rel(Relation::Below)
        } else if c.keyword("inside") {
            Op::Rel(Relation::Inside)
        } else if c.keyword("left_of") {
            Op::Rel(Relation::LeftOf)
        } else if c.keyword("right_of") {
            Op::Rel(Relation::RightOf)
        } else if c.keyword("left") {
            c.expect_keyword("of")?;
            Op::Rel(Relation::LeftOf)
        } else if c.keyword("right") {
            c.expect_keyword("of")?;
            Op::Rel(Relation::RightOf)
        } else if c.keyword("larger") {
            c.expect_keyword("than")?;
            Op::Size(SizeRelation::LargerThan)
        } else if c.keyword("smaller") {
            c.expect_keyword("than")?;
            Op::Size(SizeRelation::SmallerThan)
        } else {
            return Err(ConstraintParseError {
                line: 1,
                column: kind_col,
                message: "expected a relation (ABOVE, BELOW, LEFT OF, RIGHT OF, INSIDE, LARGER THAN, SMALLER THAN)".into(),
            });
        };
        let b = c.selector()?;
        match op {
            Op::Rel(relation) => ConstraintKind::Relation { relation, a, b },
            Op::Size(relation) => ConstraintKind::SizeRel { relation, a, b },
        }
    };
    c.finish()?;
    Ok(Constraint {
        kind,
        surface_text: line.trim().into(),
    })
}

/// An ordered list of constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    /// Parses a file body: one constraint per line, blank and `#` comment lines skipped.
    pub fn parse(text: &str) -> Result<Self, ConstraintParseError> {
        let mut constraints = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (t.starts_with('#') && !is_index_selector_line(t)) {
                continue;
            }
            let c = parse(line).map_err(|e| ConstraintParseError { line: i + 1, ..e })?;
            constraints.push(c);
        }
        Ok(ConstraintSet { constraints })
    }

    /// One surface line per constraint.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.constraints {
            s.push_str(&c.surface_text);
            s.push('\n');
        }
        s
    }

    /// Surface lines joined for a prompt slot.
    pub fn prompt_text(&self) -> Option<String> {
        if self.constraints.is_empty() {
            return None;
        }
        let lines: Vec<&str> = self
            .constraints
            .iter()
            .map(|c| c.surface_text.as_str())
            .collect();
        Some(lines.join("; "))
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// `#3 ABOVE text` starts with `#` but is a constraint, not a comment.
fn is_index_selector_line(t: &str) -> bool {
    t[1..].chars().next().is_some_and(|c| c.is_ascii_digit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintOutcome {
    pub surface_text: String,
    pub verdict: Verdict,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub outcomes: Vec<ConstraintOutcome>,
    /// `violated / (satisfied + violated)`, 0 when nothing applies.
    pub vio: f64,
}

impl ViolationReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.verdict == verdict)
            .count()
    }
}

fn union_extent(els: &[&Element]) -> NormBox {
    let mut b = NormBox::new(
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for e in els {
        b.left = b.left.min(e.bbox.left);
        b.top = b.top.min(e.bbox.top);
        b.right = b.right.max(e.bbox.right);
        b.bottom = b.bottom.max(e.bbox.bottom);
    }
    b
}

/// Evaluates one constraint against a layout.
pub fn check_one(elements: &[Element], kind: &ConstraintKind) -> (Verdict, String) {
    let verdict = |ok: bool| {
        if ok {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        }
    };
    let nothing = |s: &Selector| (Verdict::Inapplicable, format!("{s} matches no element"));
    match kind {
        ConstraintKind::Region {
            target,
            region,
            band,
        } => {
            let sel = target.select(elements);
            if sel.is_empty() {
                return nothing(target);
            }
            let outside = sel
                .iter()
                .filter(|e| !region.contains(*band, e.bbox.center()))
                .count();
            (
                verdict(outside == 0),
                format!(
                    "{outside} of {} element(s) outside the {} band",
                    sel.len(),
                    region.name()
                ),
            )
        }
        ConstraintKind::Relation { relation, a, b } => {
            let (sa, sb) = (a.select(elements), b.select(elements));
            if sa.is_empty() {
                return nothing(a);
            }
            if sb.is_empty() {
                return nothing(b);
            }
            let (ea, eb) = (union_extent(&sa), union_extent(&sb));
            let (ok, detail) = match relation {
                Relation::Above => (
                    ea.bottom <= eb.top + EDGE_TOLERANCE,
                    format!("bottom {:.4} vs top {:.4}", ea.bottom, eb.top),
                ),
                Relation::Below => (
                    ea.top >= eb.bottom - EDGE_TOLERANCE,
                    format!("top {:.4} vs bottom {:.4}", ea.top, eb.bottom),
                ),
                Relation::LeftOf => (
                    ea.right <= eb.left + EDGE_TOLERANCE,
                    format!("right {:.4} vs left {:.4}", ea.right, eb.left),
                ),
                Relation::RightOf => (
                    ea.left >= eb.right - EDGE_TOLERANCE,
                    format!("left {:.4} vs right {:.4}", ea.left, eb.right),
                ),
                Relation::Inside => {
                    let ok = sa.iter().all(|x| {
                        sb.iter()
                            .any(|y| y.bbox.contains_box(&x.bbox, EDGE_TOLERANCE))
                    });
                    (ok, "containment of every selected element".into())
                }
            };
            (verdict(ok), detail)
        }
        ConstraintKind::SizeRel { relation, a, b } => {
            let (sa, sb) = (a.select(elements), b.select(elements));
            if sa.is_empty() {
                return nothing(a);
            }
            if sb.is_empty() {
                return nothing(b);
            }
            let area = |s: &[&Element]| s.iter().map(|e| e.bbox.area()).sum::<f64>();
            let (aa, ab) = (area(&sa), area(&sb));
            let ok = match relation {
                SizeRelation::LargerThan => aa > ab,
                SizeRelation::SmallerThan => aa < ab,
            };
            (verdict(ok), format!("area {aa:.4} vs {ab:.4}"))
        }
        ConstraintKind::Count {
            category,
            comparator,
            n,
        } => {
            let have = elements.iter().filter(|e| &e.category == category).count();
            (
                verdict(comparator.holds(have, *n)),
                format!("{have} {category} element(s)"),
            )
        }
        ConstraintKind::AlignGroup {
            axis,
            members,
            tolerance,
        } => {
            let mut values = Vec::new();
            for m in members {
                values.extend(m.select(elements).iter().map(|e| e.bbox.axis(*axis)));
            }
            if values.len() < 2 {
                return (
                    Verdict::Inapplicable,
                    "fewer than two elements selected".into(),
                );
            }
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (
                verdict(hi - lo <= tolerance + 1e-12),
                format!("{} spread {:.4}", axis.name(), hi - lo),
            )
        }
    }
}

pub fn check(elements: &[Element], set: &ConstraintSet) -> ViolationReport {
    let outcomes: Vec<ConstraintOutcome> = set
        .constraints
        .iter()
        .map(|c| {
            let (verdict, explanation) = check_one(elements, &c.kind);
            ConstraintOutcome {
                surface_text: c.surface_text.clone(),
                verdict,
                explanation,
            }
        })
        .collect();
    let sat = outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Satisfied)
        .count();
    let vio = outcomes
        .iter()
        .filter(|o| o.verdict == Verdict::Violated)
        .count();
    ViolationReport {
        vio: if sat + vio == 0 {
            0.0
        } else {
            vio as f64 / (sat + vio) as f64
        },
        outcomes,
    }
}

/// Result of [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub set: ConstraintSet,
    /// True when the layout admitted fewer satisfied candidates than requested.
    pub short: bool,
}

fn candidates(elements: &[Element]) -> Vec<ConstraintKind> {
    let mut labels: Vec<&str> = Vec::new();
    for e in elements {
        if !labels.contains(&e.category.as_str()) {
            labels.push(&e.category);
        }
    }
    let mut out = Vec::new();
    for &label in &labels {
        for region in Region::ALL {
            out.push(ConstraintKind::Region {
                target: Selector::Label(label.into()),
                region,
                band: DEFAULT_BAND,
            });
        }
        out.push(ConstraintKind::Count {
            category: label.into(),
            comparator: Comparator::Eq,
            n: elements.iter().filter(|e| e.category == label).count(),
        });
    }

    let clear = |a: &[&Element], b: &[&Element], rel: Relation| {
        let (ea, eb) = (union_extent(a), union_extent(b));
        match rel {
            Relation::Above => eb.top - ea.bottom >= SYNTH_CLEARANCE,
            Relation::LeftOf => eb.left - ea.right >= SYNTH_CLEARANCE,
            _ => false,
        }
    };
    let mut pairs: Vec<(Selector, Selector)> = Vec::new();
    for &a in &labels {
        for &b in &labels {
            if a != b {
                pairs.push((Selector::Label(a.into()), Selector::Label(b.into())));
            }
        }
    }
    for i in 0..elements.len() {
        for j in 0..elements.len() {
            if i != j {
                pairs.push((Selector::Index(i), Selector::Index(j)));
            }
        }
    }
    for (a, b) in pairs {
        let (sa, sb) = (a.select(elements), b.select(elements));
        for relation in [Relation::Above, Relation::LeftOf] {
            if clear(&sa, &sb, relation) {
                out.push(ConstraintKind::Relation {
                    relation,
                    a: a.clone(),
                    b: b.clone(),
                });
            }
        }
    }
    out
}

/// Samples `k` constraints that `elements` satisfies, deterministically for a seed.
///
/// Candidates are region placements of each category (default band), exact
/// category counts, and above/left-of relations between categories or single
/// elements whose extents are separated by at least [`SYNTH_CLEARANCE`].
pub fn synthesize(elements: &[Element], seed: u64, k: usize) -> Synthesis {
    let mut pool: Vec<ConstraintKind> = candidates(elements)
        .into_iter()
        .filter(|c| check_one(elements, c).0 == Verdict::Satisfied)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = k.min(pool.len());
    for i in 0..take {
        let span = (pool.len() - i) as u64;
        let j = i + ((rng.next_u64() as u128 * span as u128) >> 64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(take);
    Synthesis {
        set: ConstraintSet {
            constraints: pool.into_iter().map(Constraint::from_kind).collect(),
        },
        short: take < k,
    }
}
