//! Gapless daily series: per-class detection counts, daily shares, and
//! attack/fatality totals, plus the wide-CSV interchange format.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Days, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::csv_row;
use crate::ingest::{ClassLabel, DetectionRecord, EventKind, EventRecord, PostRecord};

/// Name of the zero-total flag column in share tables.
pub const ZERO_DAY_COLUMN: &str = "zero_day";

/// Observation window of the source account: 2022-02-21 through 2022-12-31.
pub fn default_range() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2022, 2, 21).expect("valid date"),
        NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date"),
    )
}

fn check_range(start: NaiveDate, end: NaiveDate) -> Result<usize> {
    if start > end {
        return Err(Error::InvalidArgument(format!(
            "start date {start} is after end date {end}"
        )));
    }
    Ok((end - start).num_days() as usize + 1)
}

fn offset(start: NaiveDate, date: NaiveDate) -> Option<usize> {
    let d = (date - start).num_days();
    (d >= 0).then_some(d as usize)
}

/// One value per consecutive calendar day starting at `start`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DailySeries {
    pub name: String,
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn new(name: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!("series `{name}` is empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "series `{name}` has a non-finite value at index {i}"
            )));
        }
        Ok(DailySeries {
            name,
            start,
            values,
        })
    }

    pub fn zeros(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let len = check_range(start, end)?;
        Ok(DailySeries {
            name: name.into(),
            start,
            values: vec![0.0; len],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.values.len() - 1)
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        offset(self.start, date).and_then(|i| self.values.get(i).copied())
    }

    /// Sub-range `[start, end]`, which must lie inside the series.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let (a, b) = match (offset(self.start, start), offset(self.start, end)) {
            (Some(a), Some(b)) if a <= b && b < self.len() => (a, b),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "range {start}..{end} is outside series `{}` ({}..{})",
                    self.name,
                    self.start,
                    self.end()
                )))
            }
        };
        Ok(DailySeries {
            name: self.name.clone(),
            start,
            values: self.values[a..=b].to_vec(),
        })
    }
}

/// Named series sharing one date range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSet {
    start: NaiveDate,
    end: NaiveDate,
    series: Vec<DailySeries>,
}

impl SeriesSet {
    pub fn new(series: Vec<DailySeries>) -> Result<Self> {
        let first = series.first().ok_or_else(|| {
            Error::InvalidArgument("a series set needs at least one series".into())
        })?;
        let (start, end) = (first.start, first.end());
        let mut names = BTreeSet::new();
        for s in &series {
            if s.start != start || s.end() != end {
                return Err(Error::InvalidArgument(format!(
                    "series `{}` spans {}..{}, expected {start}..{end}",
                    s.name,
                    s.start,
                    s.end()
                )));
            }
            if !names.insert(s.name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate series name `{}`",
                    s.name
                )));
            }
        }
        Ok(SeriesSet { start, end, series })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn series(&self) -> &[DailySeries] {
        &self.series
    }

    pub fn into_series(self) -> Vec<DailySeries> {
        self.series
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.iter().map(|s| s.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&DailySeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&DailySeries> {
        self.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            Error::InvalidArgument(format!(
                "no series named `{name}` (have: {})",
                known.join(", ")
            ))
        })
    }

    /// Append more series over the same range.
    pub fn extend(self, more: impl IntoIterator<Item = DailySeries>) -> Result<Self> {
        let mut series = self.series;
        series.extend(more);
        SeriesSet::new(series)
    }

    /// Wide CSV: a `date` column followed by one column per series.
    pub fn to_wide_csv(&self) -> String {
        let mut header = vec!["date"];
        header.extend(self.names());
        let mut out = csv_row(&header);
        for i in 0..self.len() {
            let date = self.series[0].date(i).to_string();
            let values: Vec<String> = self
                .series
                .iter()
                .map(|s| s.values[i].to_string())
                .collect();
            let mut row = vec![date.as_str()];
            row.extend(values.iter().map(String::as_str));
            out.push_str(&csv_row(&row));
        }
        out
    }

    /// Parse the wide CSV written by [`SeriesSet::to_wide_csv`]. Dates must
    /// be consecutive.
    pub fn from_wide_csv(text: &str, source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::input(source, 1, "<header>", e.to_string()))?
            .clone();
        if headers.get(0).map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
            return Err(Error::input(
                source,
                1,
                "date",
                "first column must be `date`",
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        if names.is_empty() {
            return Err(Error::input(source, 1, "<header>", "no series columns"));
        }
        let mut start = None;
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (row_no, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::input(source, row_no + 2, "<row>", e.to_string()))?;
            let line = rec.position().map_or(row_no + 2, |p| p.line() as usize);
            let raw = rec.get(0).unwrap_or("");
            let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| {
                Error::input(
                    source,
                    line,
                    "date",
                    format!("invalid calendar date `{raw}`"),
                )
            })?;
            let first: NaiveDate = *start.get_or_insert(date);
            if offset(first, date) != Some(row_no) {
                return Err(Error::input(
                    source,
                    line,
                    "date",
                    format!("expected consecutive day, got {date}"),
                ));
            }
            for (j, name) in names.iter().enumerate() {
                let cell = rec.get(j + 1).unwrap_or("");
                let v = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::input(
                            source,
                            line,
                            name,
                            format!("`{cell}` is not a finite number"),
                        )
                    })?;
                columns[j].push(v);
            }
        }
        let start = start.ok_or_else(|| Error::input(source, 2, "date", "no rows"))?;
        let series = names
            .into_iter()
            .zip(columns)
            .map(|(n, v)| DailySeries::new(n, start, v))
            .collect::<Result<Vec<_>>>()?;
        SeriesSet::new(series)
    }
}

/// What one unit of a daily count is.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountUnit {
    /// Every qualifying detection box.
    #[default]
    Boxes,
    /// Distinct images with at least one qualifying box.
    Images,
    /// Distinct posts with at least one qualifying box.
    Posts,
}

impl std::str::FromStr for CountUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "boxes" => Ok(CountUnit::Boxes),
            "images" => Ok(CountUnit::Images),
            "posts" => Ok(CountUnit::Posts),
            _ => Err(format!("unknown unit `{s}` (expected posts|images|boxes)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountOptions {
    pub conf_threshold: f64,
    pub unit: CountUnit,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            conf_threshold: 0.0,
            unit: CountUnit::Boxes,
        }
    }
}

/// Maps each image to the post that owns it. An image shared by several
/// posts belongs to the earliest one (ties by post id).
pub struct PostIndex<'a> {
    owner: HashMap<&'a str, &'a PostRecord>,
}

impl<'a> PostIndex<'a> {
    pub fn new(posts: &'a [PostRecord]) -> Self {
        let mut owner: HashMap<&str, &PostRecord> = HashMap::new();
        for p in posts {
            for img in &p.image_ids {
                owner
                    .entry(img.as_str())
                    .and_modify(|cur| {
                        if (p.timestamp, &p.post_id) < (cur.timestamp, &cur.post_id) {
                            *cur = p;
                        }
                    })
                    .or_insert(p);
            }
        }
        PostIndex { owner }
    }

    pub fn owner(&self, image_id: &str) -> Option<&'a PostRecord> {
        self.owner.get(image_id).copied()
    }
}

/// Daily counts for one class plus the number of detections skipped
/// because no post owns their image.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassCounts {
    pub series: DailySeries,
    pub orphaned: usize,
}

/// Series name used for a class count column.
pub fn count_name(label: &ClassLabel) -> String {
    format!("count:{label}")
}

/// Daily count of `class` by the UTC date of the owning post.
pub fn daily_counts(
    posts: &[PostRecord],
    detections: &[DetectionRecord],
    class: &ClassLabel,
    opts: &CountOptions,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<ClassCounts> {
    let index = PostIndex::new(posts);
    daily_counts_indexed(&index, detections, class, opts, start, end)
}

pub fn daily_counts_indexed(
    index: &PostIndex<'_>,
    detections: &[DetectionRecord],
    class: &ClassLabel,
    opts: &CountOptions,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<ClassCounts> {
    let mut series = DailySeries::zeros(count_name(class), start, end)?;
    let mut orphaned = 0;
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for d in detections
        .iter()
        .filter(|d| &d.label == class && d.confidence >= opts.conf_threshold)
    {
        let Some(post) = index.owner(&d.image_id) else {
            orphaned += 1;
            continue;
        };
        let key = match opts.unit {
            CountUnit::Boxes => None,
            CountUnit::Images => Some(d.image_id.as_str()),
            CountUnit::Posts => Some(post.post_id.as_str()),
        };
        if let Some(k) = key {
            if !seen.insert(k) {
                continue;
            }
        }
        if let Some(i) = offset(start, post.date()).filter(|&i| i < series.len()) {
            series.values[i] += 1.0;
        }
    }
    Ok(ClassCounts { series, orphaned })
}

/// Counts for every class present in `detections`, in label order.
pub fn class_counts(
    posts: &[PostRecord],
    detections: &[DetectionRecord],
    opts: &CountOptions,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<(SeriesSet, usize)> {
    let labels: BTreeSet<&ClassLabel> = detections.iter().map(|d| &d.label).collect();
    if labels.is_empty() {
        return Err(Error::InsufficientData("no detections to count".into()));
    }
    let index = PostIndex::new(posts);
    let series = labels
        .into_iter()
        .map(|label| {
            daily_counts_indexed(&index, detections, label, opts, start, end).map(|c| c.series)
        })
        .collect::<Result<Vec<_>>>()?;
    let orphaned = detections
        .iter()
        .filter(|d| d.confidence >= opts.conf_threshold && index.owner(&d.image_id).is_none())
        .count();
    Ok((SeriesSet::new(series)?, orphaned))
}

/// Per-day shares plus the days whose total count was zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Shares {
    pub set: SeriesSet,
    pub zero_days: Vec<NaiveDate>,
}

impl Shares {
    /// 1 on zero-total days, 0 elsewhere.
    pub fn zero_day_series(&self) -> DailySeries {
        let mut s = DailySeries::zeros(ZERO_DAY_COLUMN, self.set.start(), self.set.end())
            .expect("valid range");
        for d in &self.zero_days {
            let i = offset(s.start, *d).expect("day inside range");
            s.values[i] = 1.0;
        }
        s
    }
}

fn share_name(name: &str) -> String {
    format!("share:{}", name.strip_prefix("count:").unwrap_or(name))
}

/// Convert aligned counts into per-day shares of the daily total.
///
/// Days with a zero total get all-zero shares and are listed in
/// `zero_days`.
pub fn normalize_shares(counts: &SeriesSet) -> Shares {
    let n = counts.len();
    let totals: Vec<f64> = (0..n)
        .map(|i| counts.series().iter().map(|s| s.values[i]).sum())
        .collect();
    let zero_days = (0..n)
        .filter(|&i| totals[i] <= 0.0)
        .map(|i| counts.series()[0].date(i))
        .collect();
    let series = counts
        .series()
        .iter()
        .map(|s| DailySeries {
            name: share_name(&s.name),
            start: s.start,
            values: s
                .values
                .iter()
                .zip(&totals)
                .map(|(&c, &t)| if t > 0.0 { c / t } else { 0.0 })
                .collect(),
        })
        .collect();
    Shares {
        set: SeriesSet::new(series).expect("names stay unique"),
        zero_days,
    }
}

/// Daily attack counts and fatality totals over `[start, end]`.
///
/// `attacks` counts records of kind attack. `fatalities` sums the
/// fatalities of records matching `kind_filter` (all records when `None`).
pub fn event_series(
    events: &[EventRecord],
    kind_filter: Option<EventKind>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<(DailySeries, DailySeries)> {
    let mut attacks = DailySeries::zeros("attacks", start, end)?;
    let mut fatalities = DailySeries::zeros("fatalities", start, end)?;
    for e in events {
        let Some(i) = offset(start, e.date).filter(|&i| i < attacks.len()) else {
            continue;
        };
        if e.kind == EventKind::Attack {
            attacks.values[i] += 1.0;
        }
        if kind_filter.is_none_or(|k| k == e.kind) {
            fatalities.values[i] += e.fatalities as f64;
        }
    }
    Ok((attacks, fatalities))
}

/// Truncate every series to the intersection of their date ranges.
pub fn align(series: &[DailySeries]) -> Result<SeriesSet> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to align".into()));
    }
    let start = series.iter().map(|s| s.start).max().expect("non-empty");
    let end = series
        .iter()
        .map(DailySeries::end)
        .min()
        .expect("non-empty");
    if start > end {
        return Err(Error::InvalidArgument(
            "series date ranges do not overlap".into(),
        ));
    }
    SeriesSet::new(
        series
            .iter()
            .map(|s| s.slice(start, end))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// First difference; the result starts one day later.
pub fn difference(series: &DailySeries) -> Result<DailySeries> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "series `{}` needs at least 2 values to difference",
            series.name
        )));
    }
    Ok(DailySeries {
        name: series.name.clone(),
        start: series.date(1),
        values: series.values.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// Group series by name into a map, for callers that prefer lookups.
pub fn by_name(set: &SeriesSet) -> BTreeMap<&str, &DailySeries> {
    set.series().iter().map(|s| (s.name.as_str(), s)).collect()
}
