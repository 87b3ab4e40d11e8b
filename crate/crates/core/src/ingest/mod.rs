//! Parsing and validation of the four input file families.
//!
//! Posts are JSON lines; detections, annotations and events are CSV with a
//! header row. Every parser accepts `-` for standard input, and every
//! rejected record is reported with its 1-based line number and the
//! offending field.

mod posts;
mod records;
mod tables;
mod vocab;

use std::io::Read;
use std::path::Path;

pub use posts::{parse_posts, parse_posts_str, write_posts};
pub use records::{
    AnnotationRecord, BBox, BoxError, DetectionRecord, EventKind, EventRecord, PostRecord,
};
pub use tables::{
    parse_annotations, parse_annotations_str, parse_detections, parse_detections_str, parse_events,
    parse_events_str, write_annotations, write_detections, write_events,
};
pub use vocab::{normalize_label, ClassLabel, Vocabulary, DEFAULT_LABELS, VOCAB_ENV};

use crate::error::{Error, Result};

/// Label handling shared by the detection and annotation parsers.
#[derive(Clone, Debug, Default)]
pub struct LabelRules {
    pub vocabulary: Vocabulary,
    pub allow_unknown: bool,
}

/// Read a whole input, treating `-` as standard input.
pub fn read_source(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::io("<stdin>", e))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn source_name(path: &Path) -> String {
    if path.as_os_str() == "-" {
        "<stdin>".to_owned()
    } else {
        path.display().to_string()
    }
}
