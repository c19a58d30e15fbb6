//! Allocation-only building blocks for content-aware poster layout work.
//!
//! The crate holds everything that is pure computation: the canonical layout
//! model with normalization and quantization, the JSON wire codec and prompt
//! assembly, the three metric families (geometry, background content and
//! ground-truth similarity), the constraint grammar and checker, raster
//! compositing for rendering, and the deterministic mock layout heuristic.
//!
//! IO, dataset ingestion, network access and the command line live in the
//! `posterkit` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codec;
pub mod constraints;
pub mod layout;
pub mod metrics;
pub mod mock;
pub mod raster;
pub mod render;

mod num;

pub use codec::{ExtractPolicy, LayoutFragment, PromptBundle, RepairAction, RepairLog};
pub use constraints::{Constraint, ConstraintSet, ViolationReport};
pub use layout::{
    denormalize, normalize, quantize, validate, Canvas, CategoryVocabulary, Content, Element,
    IntRect, LayoutError, LayoutRecord, NormBox, PixelRect, ValidationPolicy, ValidationReport,
    DEFAULT_PRECISION,
};
pub use metrics::MetricReport;
pub use raster::RgbaImage;
