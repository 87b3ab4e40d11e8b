//! Per-class engagement: which posts show which classes, and how those
//! posts were received.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::csv_row;
use crate::ingest::{ClassLabel, DetectionRecord, PostRecord};

/// Post ids per class, plus detections that could not be joined.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Attribution {
    pub by_class: BTreeMap<ClassLabel, BTreeSet<String>>,
    /// Image ids that have detections but appear in no post.
    pub dangling_images: BTreeSet<String>,
    /// Number of qualifying detections on those images.
    pub dangling_detections: usize,
}

impl Attribution {
    pub fn is_empty(&self) -> bool {
        self.by_class.is_empty()
    }

    /// Distinct posts attributed to at least one class.
    pub fn posts_with_detections(&self) -> usize {
        self.by_class
            .values()
            .flatten()
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// A post counts toward class `c` once if any of its images carries a
/// detection of `c` at or above `conf_threshold`.
pub fn attribute_posts(
    posts: &[PostRecord],
    detections: &[DetectionRecord],
    conf_threshold: f64,
) -> Attribution {
    let mut owners: HashMap<&str, Vec<&str>> = HashMap::new();
    for p in posts {
        for img in &p.image_ids {
            owners
                .entry(img.as_str())
                .or_default()
                .push(p.post_id.as_str());
        }
    }
    let mut out = Attribution::default();
    for d in detections.iter().filter(|d| d.confidence >= conf_threshold) {
        match owners.get(d.image_id.as_str()) {
            Some(post_ids) => {
                let set = out.by_class.entry(d.label.clone()).or_default();
                set.extend(post_ids.iter().map(|s| (*s).to_owned()));
            }
            None => {
                out.dangling_images.insert(d.image_id.clone());
                out.dangling_detections += 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngagementRow {
    pub label: ClassLabel,
    /// Distinct posts attributed to the class.
    pub n: usize,
    pub mean_retweets: f64,
    pub mean_likes: f64,
    /// Mean and sample standard deviation of ln(1 + x).
    pub log_mean_retweets: f64,
    pub log_sd_retweets: f64,
    pub log_mean_likes: f64,
    pub log_sd_likes: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// One row per attributed class, sorted by mean retweets (descending,
/// ties by label).
pub fn engagement_table(
    posts: &[PostRecord],
    attribution: &Attribution,
) -> Result<Vec<EngagementRow>> {
    if attribution.is_empty() {
        return Err(Error::InsufficientData(
            "no posts are attributed to any class".into(),
        ));
    }
    let by_id: HashMap<&str, &PostRecord> = posts.iter().map(|p| (p.post_id.as_str(), p)).collect();
    let mut rows = Vec::with_capacity(attribution.by_class.len());
    for (label, ids) in &attribution.by_class {
        // ids iterate in sorted order, so sums do not depend on input order
        let members: Vec<&PostRecord> = ids
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect();
        if members.is_empty() {
            continue;
        }
        let rt: Vec<f64> = members.iter().map(|p| p.retweets as f64).collect();
        let lk: Vec<f64> = members.iter().map(|p| p.likes as f64).collect();
        let log_rt: Vec<f64> = rt.iter().map(|x| x.ln_1p()).collect();
        let log_lk: Vec<f64> = lk.iter().map(|x| x.ln_1p()).collect();
        let (log_mean_retweets, log_sd_retweets) = mean_sd(&log_rt);
        let (log_mean_likes, log_sd_likes) = mean_sd(&log_lk);
        rows.push(EngagementRow {
            label: label.clone(),
            n: members.len(),
            mean_retweets: mean_sd(&rt).0,
            mean_likes: mean_sd(&lk).0,
            log_mean_retweets,
            log_sd_retweets,
            log_mean_likes,
            log_sd_likes,
        });
    }
    rows.sort_by(|a, b| {
        b.mean_retweets
            .total_cmp(&a.mean_retweets)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(rows)
}

pub const ENGAGEMENT_COLUMNS: &str =
    "class,n,mean_retweets,mean_likes,log_mean_retweets,log_sd_retweets,log_mean_likes,log_sd_likes";

/// CSV rendering. The leading comment line states the counting unit.
pub fn engagement_csv(rows: &[EngagementRow]) -> String {
    let mut out = String::from("# n = distinct posts with at least one detection of the class\n");
    out.push_str(ENGAGEMENT_COLUMNS);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(&[
            r.label.as_str(),
            &r.n.to_string(),
            &r.mean_retweets.to_string(),
            &r.mean_likes.to_string(),
            &r.log_mean_retweets.to_string(),
            &r.log_sd_retweets.to_string(),
            &r.log_mean_likes.to_string(),
            &r.log_sd_likes.to_string(),
        ]));
    }
    out
}
