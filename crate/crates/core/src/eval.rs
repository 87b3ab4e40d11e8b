//! Detection scoring: IoU matching, per-class precision/recall/AP and mAP.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{AnnotationRecord, BBox, ClassLabel, DetectionRecord};

/// Intersection over union of two boxes; 0 when they do not overlap.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = a.x_max().min(b.x_max()) - a.x_min().max(b.x_min());
    let h = a.y_max().min(b.y_max()) - a.y_min().max(b.y_min());
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Outcome for one detection after greedy matching.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchedDetection {
    /// Index into the detection slice passed to [`match_detections`].
    pub detection: usize,
    pub confidence: f64,
    /// Index of the matched annotation, if any.
    pub annotation: Option<usize>,
    /// IoU with the matched annotation, or the best same-class IoU seen
    /// in the image for an unmatched detection.
    pub iou: f64,
}

impl MatchedDetection {
    pub fn is_true_positive(&self) -> bool {
        self.annotation.is_some()
    }
}

/// Matching outcome for one class, detections ordered by descending
/// confidence (ties by input position).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMatches {
    pub label: ClassLabel,
    pub instances: usize,
    pub detections: Vec<MatchedDetection>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub classes: BTreeMap<ClassLabel, ClassMatches>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.classes.values().map(|c| c.true_positives).sum()
    }
    pub fn false_positives(&self) -> usize {
        self.classes.values().map(|c| c.false_positives).sum()
    }
    pub fn false_negatives(&self) -> usize {
        self.classes.values().map(|c| c.false_negatives).sum()
    }
}

fn by_confidence(dets: &[DetectionRecord], idx: &mut [usize]) {
    // sort_by is stable, so equal confidences keep input order
    idx.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
}

fn match_class(
    label: ClassLabel,
    dets: &[DetectionRecord],
    gts: &[AnnotationRecord],
    det_idx: &[usize],
    gt_idx: &[usize],
    iou_threshold: f64,
) -> ClassMatches {
    let mut order = det_idx.to_vec();
    by_confidence(dets, &mut order);

    let mut gt_by_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &g in gt_idx {
        gt_by_image
            .entry(gts[g].image_id.as_str())
            .or_default()
            .push(g);
    }
    let mut taken = vec![false; gts.len()];

    let mut detections = Vec::with_capacity(order.len());
    for &d in &order {
        let det = &dets[d];
        let mut best: Option<(usize, f64)> = None;
        let mut best_any = 0.0f64;
        for &g in gt_by_image
            .get(det.image_id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[])
        {
            let v = iou(&det.bbox, &gts[g].bbox);
            best_any = best_any.max(v);
            if taken[g] || v < iou_threshold {
                continue;
            }
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
        }
        detections.push(MatchedDetection {
            detection: d,
            confidence: det.confidence,
            annotation: best.map(|(g, _)| g),
            iou: best.map_or(best_any, |(_, v)| v),
        });
    }

    let tp = detections.iter().filter(|m| m.is_true_positive()).count();
    ClassMatches {
        label,
        instances: gt_idx.len(),
        false_positives: detections.len() - tp,
        false_negatives: gt_idx.len() - tp,
        true_positives: tp,
        detections,
    }
}

/// Greedy matching per image and class.
///
/// Detections are visited by descending confidence; each takes the
/// still-unmatched same-class annotation in its image with the highest
/// IoU at or above `iou_threshold`. Classes are processed in parallel and
/// merged in label order.
pub fn match_detections(
    dets: &[DetectionRecord],
    gts: &[AnnotationRecord],
    iou_threshold: f64,
) -> MatchResult {
    let mut groups: BTreeMap<&ClassLabel, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups.entry(&d.label).or_default().0.push(i);
    }
    for (i, g) in gts.iter().enumerate() {
        groups.entry(&g.label).or_default().1.push(i);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let classes = groups
        .into_par_iter()
        .map(|(label, (d, g))| {
            let m = match_class(label.clone(), dets, gts, &d, &g, iou_threshold);
            (label.clone(), m)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    MatchResult { classes }
}

/// One point of a precision/recall curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

impl From<(f64, f64)> for PrPoint {
    fn from((recall, precision): (f64, f64)) -> Self {
        PrPoint { recall, precision }
    }
}

/// Accumulate TP/FP along detections already sorted by descending
/// confidence. One point per detection.
pub fn pr_curve_from_outcomes(outcomes: &[bool], instances: usize) -> Result<Vec<PrPoint>> {
    if instances == 0 {
        return Err(Error::InvalidArgument(
            "recall is undefined for a class without ground truth".into(),
        ));
    }
    let mut tp = 0usize;
    let mut out = Vec::with_capacity(outcomes.len());
    for (i, &hit) in outcomes.iter().enumerate() {
        tp += usize::from(hit);
        out.push(PrPoint {
            recall: tp as f64 / instances as f64,
            precision: tp as f64 / (i + 1) as f64,
        });
    }
    Ok(out)
}

pub fn pr_curve(class: &ClassMatches) -> Result<Vec<PrPoint>> {
    let outcomes: Vec<bool> = class
        .detections
        .iter()
        .map(MatchedDetection::is_true_positive)
        .collect();
    pr_curve_from_outcomes(&outcomes, class.instances)
}

/// All-points interpolated AP: area under the precision envelope, where
/// precision at each recall is replaced by the maximum precision at any
/// recall at or beyond it. An empty curve scores 0.
pub fn average_precision(curve: &[PrPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(curve.len() + 2);
    let mut precision = Vec::with_capacity(curve.len() + 2);
    recall.push(0.0);
    precision.push(0.0);
    for p in curve {
        recall.push(p.recall);
        precision.push(p.precision);
    }
    recall.push(curve.last().map_or(0.0, |p| p.recall));
    precision.push(0.0);

    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    recall
        .windows(2)
        .zip(&precision[1..])
        .map(|(r, &p)| (r[1] - r[0]) * p)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub iou_threshold: f64,
    /// Detections below this confidence are dropped before matching.
    pub conf_threshold: f64,
    /// Keep rows for classes that only appear among detections.
    pub include_empty_classes: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            iou_threshold: 0.5,
            conf_threshold: 0.0,
            include_empty_classes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: ClassLabel,
    pub instances: usize,
    pub detections: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub ap: f64,
    pub f1: f64,
}

/// Summary row: summed instances, macro-averaged P/R/F1 and mAP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverallMetrics {
    pub instances: usize,
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub classes: Vec<ClassMetrics>,
    pub overall: OverallMetrics,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

fn class_metrics(m: &ClassMatches) -> Result<ClassMetrics> {
    let ap = if m.instances == 0 {
        0.0
    } else {
        average_precision(&pr_curve(m)?)
    };
    let precision = ratio(m.true_positives, m.detections.len());
    let recall = ratio(m.true_positives, m.instances);
    Ok(ClassMetrics {
        label: m.label.clone(),
        instances: m.instances,
        detections: m.detections.len(),
        true_positives: m.true_positives,
        false_positives: m.false_positives,
        false_negatives: m.false_negatives,
        precision,
        recall,
        ap,
        f1: f1(precision, recall),
    })
}

/// Score `dets` against `gts`, one row per class with ground truth.
///
/// Precision and recall are taken over the whole (thresholded) detection
/// set; a class with no detections reports P = R = AP = 0.
pub fn evaluate(
    dets: &[DetectionRecord],
    gts: &[AnnotationRecord],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if gts.is_empty() {
        return Err(Error::InsufficientData(
            "no ground-truth boxes to evaluate against".into(),
        ));
    }
    if !(opts.iou_threshold > 0.0 && opts.iou_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold {} must lie in (0, 1)",
            opts.iou_threshold
        )));
    }
    let kept: Vec<DetectionRecord> = dets
        .iter()
        .filter(|d| d.confidence >= opts.conf_threshold)
        .cloned()
        .collect();
    let matches = match_detections(&kept, gts, opts.iou_threshold);
    let classes = matches
        .classes
        .values()
        .filter(|m| m.instances > 0 || opts.include_empty_classes)
        .map(class_metrics)
        .collect::<Result<Vec<_>>>()?;

    let overall = OverallMetrics {
        instances: classes.iter().map(|c| c.instances).sum(),
        precision: mean(classes.iter().map(|c| c.precision)),
        recall: mean(classes.iter().map(|c| c.recall)),
        map: mean(classes.iter().map(|c| c.ap)),
        f1: mean(classes.iter().map(|c| c.f1)),
    };
    Ok(EvalReport {
        iou_threshold: opts.iou_threshold,
        classes,
        overall,
    })
}

impl EvalReport {
    /// CSV with columns `class,instances,precision,recall,ap,f1` and a
    /// closing `ALL` row carrying mAP in the `ap` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,instances,precision,recall,ap,f1\n");
        for c in &self.classes {
            out.push_str(&csv_row(&[
                c.label.as_str(),
                &c.instances.to_string(),
                &c.precision.to_string(),
                &c.recall.to_string(),
                &c.ap.to_string(),
                &c.f1.to_string(),
            ]));
        }
        let o = &self.overall;
        out.push_str(&csv_row(&[
            "ALL",
            &o.instances.to_string(),
            &o.precision.to_string(),
            &o.recall.to_string(),
            &o.map.to_string(),
            &o.f1.to_string(),
        ]));
        out
    }
}

pub(crate) fn csv_row(fields: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
