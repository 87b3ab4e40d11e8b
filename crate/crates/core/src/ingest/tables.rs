use std::path::Path;

use chrono::NaiveDate;

use super::records::{AnnotationRecord, BBox, DetectionRecord, EventKind, EventRecord};
use super::vocab::ClassLabel;
use super::{read_source, source_name, LabelRules};
use crate::error::{Error, Result};

const DETECTION_COLUMNS: [&str; 7] = [
    "image_id",
    "label",
    "x_min",
    "y_min",
    "x_max",
    "y_max",
    "confidence",
];
const ANNOTATION_COLUMNS: [&str; 6] = ["image_id", "label", "x_min", "y_min", "x_max", "y_max"];
const EVENT_COLUMNS: [&str; 3] = ["date", "kind", "fatalities"];

/// A CSV table whose required columns have been located by header name.
struct Table<'a> {
    source: &'a str,
    index: Vec<usize>,
    names: &'static [&'static str],
}

struct Row<'t> {
    table: &'t Table<'t>,
    record: csv::StringRecord,
    line: usize,
}

impl Row<'_> {
    fn get(&self, col: usize) -> &str {
        self.record.get(self.table.index[col]).unwrap_or("")
    }

    fn err(&self, col: usize, message: impl Into<String>) -> Error {
        Error::input(self.table.source, self.line, self.table.names[col], message)
    }

    fn text(&self, col: usize) -> Result<String> {
        let v = self.get(col);
        if v.is_empty() {
            Err(self.err(col, "empty value"))
        } else {
            Ok(v.to_owned())
        }
    }

    fn real(&self, col: usize) -> Result<f64> {
        let v = self.get(col);
        v.parse::<f64>()
            .map_err(|_| self.err(col, format!("`{v}` is not a number")))
    }

    fn label(&self, col: usize, rules: &LabelRules) -> Result<ClassLabel> {
        rules
            .vocabulary
            .resolve(self.get(col), rules.allow_unknown)
            .map_err(|m| self.err(col, m))
    }

    fn bbox(&self, first: usize) -> Result<BBox> {
        let c = [
            self.real(first)?,
            self.real(first + 1)?,
            self.real(first + 2)?,
            self.real(first + 3)?,
        ];
        BBox::new(c[0], c[1], c[2], c[3]).map_err(|e| {
            let col = ["x_min", "y_min", "x_max", "y_max"]
                .iter()
                .position(|n| *n == e.field)
                .unwrap_or(0);
            self.err(first + col, e.message)
        })
    }
}

fn for_each_row<T>(
    text: &str,
    source: &str,
    names: &'static [&'static str],
    mut f: impl FnMut(&Row<'_>) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::input(source, 1, "<header>", e.to_string()))?
        .clone();
    if headers.is_empty() && text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let index = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::input(source, 1, name, "missing column in header"))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = Table {
        source,
        index,
        names,
    };
    let mut out = Vec::new();
    for rec in reader.records() {
        let record = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::input(source, line, "<row>", e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let row = Row {
            table: &table,
            record,
            line,
        };
        out.push(f(&row)?);
    }
    Ok(out)
}

pub fn parse_detections(path: &Path, rules: &LabelRules) -> Result<Vec<DetectionRecord>> {
    parse_detections_str(&read_source(path)?, &source_name(path), rules)
}

pub fn parse_detections_str(
    text: &str,
    source: &str,
    rules: &LabelRules,
) -> Result<Vec<DetectionRecord>> {
    for_each_row(text, source, &DETECTION_COLUMNS, |row| {
        let confidence = row.real(6)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(row.err(6, format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(DetectionRecord {
            image_id: row.text(0)?,
            label: row.label(1, rules)?,
            bbox: row.bbox(2)?,
            confidence,
        })
    })
}

pub fn parse_annotations(path: &Path, rules: &LabelRules) -> Result<Vec<AnnotationRecord>> {
    parse_annotations_str(&read_source(path)?, &source_name(path), rules)
}

pub fn parse_annotations_str(
    text: &str,
    source: &str,
    rules: &LabelRules,
) -> Result<Vec<AnnotationRecord>> {
    for_each_row(text, source, &ANNOTATION_COLUMNS, |row| {
        Ok(AnnotationRecord {
            image_id: row.text(0)?,
            label: row.label(1, rules)?,
            bbox: row.bbox(2)?,
        })
    })
}

pub fn parse_events(path: &Path) -> Result<Vec<EventRecord>> {
    parse_events_str(&read_source(path)?, &source_name(path))
}

/// Parse events and sort them by date (stable, so same-day order is kept).
pub fn parse_events_str(text: &str, source: &str) -> Result<Vec<EventRecord>> {
    let mut events = for_each_row(text, source, &EVENT_COLUMNS, |row| {
        let raw_date = row.get(0);
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|_| row.err(0, format!("invalid calendar date `{raw_date}`")))?;
        let kind: EventKind = row.get(1).parse().map_err(|m: String| row.err(1, m))?;
        let raw_fat = row.get(2);
        let fatalities = match raw_fat.parse::<i64>() {
            Ok(n) if n < 0 => return Err(row.err(2, format!("negative fatalities {n}"))),
            Ok(n) => n as u64,
            Err(_) => return Err(row.err(2, format!("`{raw_fat}` is not an integer"))),
        };
        Ok(EventRecord {
            date,
            kind,
            fatalities,
        })
    })?;
    events.sort_by_key(|e| e.date);
    Ok(events)
}

fn to_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn box_fields(b: &BBox) -> [String; 4] {
    [b.x_min(), b.y_min(), b.x_max(), b.y_max()].map(|v| v.to_string())
}

pub fn write_detections(records: &[DetectionRecord]) -> String {
    to_csv(
        &DETECTION_COLUMNS,
        records.iter().map(|d| {
            let mut row = vec![d.image_id.clone(), d.label.to_string()];
            row.extend(box_fields(&d.bbox));
            row.push(d.confidence.to_string());
            row
        }),
    )
}

pub fn write_annotations(records: &[AnnotationRecord]) -> String {
    to_csv(
        &ANNOTATION_COLUMNS,
        records.iter().map(|a| {
            let mut row = vec![a.image_id.clone(), a.label.to_string()];
            row.extend(box_fields(&a.bbox));
            row
        }),
    )
}

pub fn write_events(records: &[EventRecord]) -> String {
    to_csv(
        &EVENT_COLUMNS,
        records.iter().map(|e| {
            vec![
                e.date.to_string(),
                e.kind.to_string(),
                e.fatalities.to_string(),
            ]
        }),
    )
}
