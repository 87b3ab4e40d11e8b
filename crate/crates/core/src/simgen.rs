//! Synthetic data with known structure: stationary VAR processes,
//! lagged-dependence pairs and complete input-file bundles.

use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate, TimeZone, Utc};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::econ::VarData;
use crate::error::{Error, Result};
use crate::ingest::{
    write_annotations, write_detections, write_events, write_posts, AnnotationRecord, BBox,
    ClassLabel, DetectionRecord, EventKind, EventRecord, PostRecord, DEFAULT_LABELS,
};
use crate::timeseries::{default_range, DailySeries, SeriesSet};

pub const DEFAULT_BURN_IN: usize = 200;

/// A stationary Gaussian VAR(p) to simulate from.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSpec {
    names: Vec<String>,
    coefficients: Vec<DMatrix<f64>>,
    intercept: DVector<f64>,
    noise_factor: DMatrix<f64>,
    n: usize,
    seed: u64,
    burn_in: usize,
    initial: Vec<DVector<f64>>,
}

/// JSON form of a [`SimSpec`]. Only `coefficients`, `n` and `seed` are
/// required; `k` and `p` are checked against the matrices when given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpecDoc {
    pub k: Option<usize>,
    pub p: Option<usize>,
    /// A_1..A_p, each as rows.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub noise_cov: Option<Vec<Vec<f64>>>,
    pub intercept: Option<Vec<f64>>,
    pub n: usize,
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub names: Option<Vec<String>>,
}

/// Largest eigenvalue modulus of the VAR companion matrix.
pub fn spectral_radius(coefficients: &[DMatrix<f64>]) -> f64 {
    let k = coefficients[0].nrows();
    let kp = k * coefficients.len();
    let mut companion = DMatrix::zeros(kp, kp);
    for (i, a) in coefficients.iter().enumerate() {
        companion.view_mut((0, i * k), (k, k)).copy_from(a);
    }
    for r in k..kp {
        companion[(r, r - k)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// A matrix L with L Lᵀ = cov, for a symmetric positive semidefinite cov.
fn noise_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if (cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
        return Err(Error::InvalidArgument(
            "noise covariance is not symmetric".into(),
        ));
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = cov.clone().symmetric_eigen();
    let floor = -1e-12 * cov.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::InvalidArgument(
            "noise covariance is not positive semidefinite".into(),
        ));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(eig.eigenvectors * sqrt)
}

impl SimSpec {
    /// Build a spec with zero intercept, zero initial state and the default
    /// burn-in. Rejects explosive or unit-root processes.
    pub fn new(
        coefficients: Vec<DMatrix<f64>>,
        noise_cov: DMatrix<f64>,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        let k = coefficients
            .first()
            .ok_or_else(|| {
                Error::InvalidArgument("at least one coefficient matrix is required".into())
            })?
            .nrows();
        if k == 0 || coefficients.iter().any(|a| a.shape() != (k, k)) {
            return Err(Error::InvalidArgument(
                "coefficient matrices must all be k×k".into(),
            ));
        }
        if noise_cov.shape() != (k, k) {
            return Err(Error::InvalidArgument(
                "noise covariance must be k×k".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "series length must be at least 1".into(),
            ));
        }
        if coefficients
            .iter()
            .flat_map(|a| a.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        let radius = spectral_radius(&coefficients);
        if radius.is_nan() || radius >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "process is not stationary: companion spectral radius {radius:.6} >= 1"
            )));
        }
        let p = coefficients.len();
        Ok(SimSpec {
            names: (1..=k).map(|i| format!("y{i}")).collect(),
            intercept: DVector::zeros(k),
            noise_factor: noise_factor(&noise_cov)?,
            initial: vec![DVector::zeros(k); p],
            coefficients,
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} variables",
                names.len(),
                self.k()
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn with_intercept(mut self, intercept: DVector<f64>) -> Result<Self> {
        if intercept.len() != self.k() {
            return Err(Error::InvalidArgument(
                "intercept length must equal k".into(),
            ));
        }
        self.intercept = intercept;
        Ok(self)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Pre-sample values y_{-1}, ..., y_{-p} (latest first).
    pub fn with_initial(mut self, initial: Vec<DVector<f64>>) -> Result<Self> {
        if initial.len() != self.lag_order() || initial.iter().any(|v| v.len() != self.k()) {
            return Err(Error::InvalidArgument(
                "initial state must hold p vectors of length k".into(),
            ));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_doc(doc: &SimSpecDoc) -> Result<Self> {
        let to_matrix = |rows: &Vec<Vec<f64>>| -> Result<DMatrix<f64>> {
            let r = rows.len();
            let c = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|row| row.len() != c) {
                return Err(Error::InvalidArgument("ragged matrix in spec".into()));
            }
            Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
        };
        let coefficients = doc
            .coefficients
            .iter()
            .map(to_matrix)
            .collect::<Result<Vec<_>>>()?;
        let k = coefficients.first().map_or(0, DMatrix::nrows);
        if doc.k.is_some_and(|dk| dk != k) || doc.p.is_some_and(|dp| dp != coefficients.len()) {
            return Err(Error::InvalidArgument(
                "k/p disagree with the coefficient matrices".into(),
            ));
        }
        let cov = match &doc.noise_cov {
            Some(c) => to_matrix(c)?,
            None => DMatrix::identity(k, k),
        };
        let mut spec = SimSpec::new(coefficients, cov, doc.n, doc.seed)?;
        if let Some(c) = &doc.intercept {
            spec = spec.with_intercept(DVector::from_column_slice(c))?;
        }
        if let Some(b) = doc.burn_in {
            spec = spec.with_burn_in(b);
        }
        if let Some(names) = &doc.names {
            spec = spec.with_names(names.clone())?;
        }
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SimSpecDoc = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("simulation spec: {e}")))?;
        Self::from_doc(&doc)
    }

    pub fn k(&self) -> usize {
        self.intercept.len()
    }

    pub fn lag_order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Simulate `spec` as an n×k data matrix. Same spec and seed give the
/// same bits.
pub fn simulate_var_data(spec: &SimSpec) -> Result<VarData> {
    let k = spec.k();
    let p = spec.lag_order();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    // history[0] is the latest value
    let mut history: Vec<DVector<f64>> = spec.initial.clone();
    let total = spec.burn_in + spec.n;
    let mut values = DMatrix::zeros(spec.n, k);
    for t in 0..total {
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let mut y = &spec.intercept + &spec.noise_factor * z;
        for (a, lagged) in spec.coefficients.iter().zip(&history) {
            y += a * lagged;
        }
        if t >= spec.burn_in {
            values.set_row(t - spec.burn_in, &y.transpose());
        }
        history.rotate_right(1);
        history[0] = y;
        debug_assert_eq!(history.len(), p);
    }
    VarData::new(spec.names.clone(), values)
}

/// Simulate `spec` as daily series starting on the first day of the
/// default window.
pub fn simulate_var(spec: &SimSpec) -> Result<SeriesSet> {
    let data = simulate_var_data(spec)?;
    let start = default_range().0;
    SeriesSet::new(
        (0..data.k())
            .map(|j| DailySeries::new(data.names()[j].clone(), start, data.column(j)))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// `x` is standard Gaussian white noise and `y_t = beta x_{t-lag} + e_t`
/// with independent standard Gaussian `e`.
pub fn simulate_lagged_pair(
    beta: f64,
    lag: usize,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if lag == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".into()));
    }
    if n <= lag + 10 {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must exceed lag + 10 = {}",
            lag + 10
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x_full: Vec<f64> = (0..n + lag)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let y = (0..n)
        .map(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            beta * x_full[t] + e
        })
        .collect();
    Ok((x_full[lag..].to_vec(), y))
}

/// Hand-annotated class frequencies reproduced by the fixture bundle.
pub const ANNOTATION_COUNTS: [(&str, usize); 5] = [
    ("rpg", 279),
    ("insignia", 128),
    ("grenade", 95),
    ("land mine", 44),
    ("anti-tank", 43),
];
/// Number of distinct annotated images in the fixture bundle.
pub const ANNOTATED_IMAGES: usize = 567;
/// Days between a land-mine detection spike and the fatalities it feeds.
pub const PLANTED_LEAD_DAYS: usize = 4;

/// A complete, internally consistent set of input records.
#[derive(Clone, Debug, PartialEq)]
pub struct FixtureBundle {
    pub posts: Vec<PostRecord>,
    pub detections: Vec<DetectionRecord>,
    pub annotations: Vec<AnnotationRecord>,
    pub events: Vec<EventRecord>,
}

pub const BUNDLE_FILES: [&str; 4] = [
    "posts.jsonl",
    "detections.csv",
    "annotations.csv",
    "events.csv",
];

impl FixtureBundle {
    /// File names paired with their contents, in [`BUNDLE_FILES`] order.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let contents = [
            write_posts(&self.posts),
            write_detections(&self.detections),
            write_annotations(&self.annotations),
            write_events(&self.events),
        ];
        BUNDLE_FILES.into_iter().zip(contents).collect()
    }

    /// Write the four input files into `dir` (created if missing).
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.files()
            .into_iter()
            .map(|(name, text)| {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

const IMAGE_W: f64 = 640.0;
const IMAGE_H: f64 = 480.0;

fn label(s: &str) -> ClassLabel {
    ClassLabel::new(s).expect("static label")
}

/// Box in horizontal slot `slot` (0 or 1) so boxes in one image never overlap.
fn random_box(rng: &mut ChaCha20Rng, slot: usize) -> BBox {
    let w = rng.random_range(40.0..200.0f64).round();
    let h = rng.random_range(40.0..200.0f64).round();
    let x0 = (slot as f64 * 320.0 + rng.random_range(0.0..(300.0 - w).max(1.0))).round();
    let y0 = rng.random_range(0.0..(IMAGE_H - h)).round();
    BBox::new(x0, y0, x0 + w, y0 + h).expect("positive size")
}

fn jitter(rng: &mut ChaCha20Rng, b: &BBox) -> BBox {
    let d = |rng: &mut ChaCha20Rng| rng.random_range(-4.0..4.0f64).round();
    let x0 = (b.x_min() + d(rng)).max(0.0);
    let y0 = (b.y_min() + d(rng)).max(0.0);
    let x1 = (b.x_max() + d(rng)).min(IMAGE_W).max(x0 + 1.0);
    let y1 = (b.y_max() + d(rng)).min(IMAGE_H).max(y0 + 1.0);
    BBox::new(x0, y0, x1, y1).expect("non-degenerate jitter")
}

fn confidence(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 1000.0).round() / 1000.0
}

/// Generate the synthetic bundle for `seed`.
///
/// Posts cover every day of the default window. Annotations span
/// exactly [`ANNOTATED_IMAGES`] images with the [`ANNOTATION_COUNTS`]
/// class totals. Detections are noisy copies of the annotations plus
/// free-standing detections on the other images; extra land-mine
/// detections on a day raise attack fatalities [`PLANTED_LEAD_DAYS`]
/// days later.
pub fn synth_fixture_bundle(seed: u64) -> FixtureBundle {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (start, end) = default_range();
    let days = (end - start).num_days() as usize + 1;

    // Posts and their image slots.
    let engagement = LogNormal::new(5.8, 0.8).expect("valid parameters");
    let like_ratio = LogNormal::new(2.1, 0.4).expect("valid parameters");
    let mut posts = Vec::new();
    let mut slots: Vec<(usize, usize)> = Vec::new(); // (post index, image position)
    for day in 0..days {
        let date = start + Days::new(day as u64);
        let per_day = rng.random_range(3..=9);
        let mut secs: Vec<u32> = (0..per_day).map(|_| rng.random_range(0..86_400)).collect();
        secs.sort_unstable();
        for (i, s) in secs.into_iter().enumerate() {
            let ts = Utc.from_utc_datetime(
                &date
                    .and_hms_opt(s / 3600, (s / 60) % 60, s % 60)
                    .expect("valid time"),
            );
            let retweets: f64 = engagement.sample(&mut rng);
            let likes = retweets * like_ratio.sample(&mut rng);
            let n_images = rng.random_range(1..=3);
            for pos in 0..n_images {
                slots.push((posts.len(), pos));
            }
            posts.push(PostRecord {
                post_id: format!("p{day:03}-{i}"),
                timestamp: ts,
                retweets: retweets.round() as u64,
                likes: likes.round() as u64,
                image_ids: Vec::with_capacity(n_images),
            });
        }
    }
    let mut annotated_slots: Vec<usize> = (0..slots.len()).collect();
    annotated_slots.shuffle(&mut rng);
    let mut is_annotated = vec![None; slots.len()];
    for (a, &slot) in annotated_slots.iter().take(ANNOTATED_IMAGES).enumerate() {
        is_annotated[slot] = Some(a);
    }
    let mut day_images: Vec<Vec<String>> = vec![Vec::new(); days];
    for (slot, &(post, _)) in slots.iter().enumerate() {
        let id = match is_annotated[slot] {
            Some(a) => format!("a{a:04}"),
            None => format!("img{slot:05}"),
        };
        let day = (posts[post].date() - start).num_days() as usize;
        if is_annotated[slot].is_none() {
            day_images[day].push(id.clone());
        }
        posts[post].image_ids.push(id);
    }

    // Ground truth: one box per annotated image, extras go to a second slot.
    let mut labels: Vec<&str> = ANNOTATION_COUNTS
        .iter()
        .flat_map(|(l, c)| std::iter::repeat_n(*l, *c))
        .collect();
    labels.shuffle(&mut rng);
    let mut annotations = Vec::with_capacity(labels.len());
    let mut second: Vec<usize> = (0..ANNOTATED_IMAGES).collect();
    second.shuffle(&mut rng);
    for (i, l) in labels.iter().enumerate() {
        let (image, slot) = if i < ANNOTATED_IMAGES {
            (i, 0)
        } else {
            (second[i - ANNOTATED_IMAGES], 1)
        };
        annotations.push(AnnotationRecord {
            image_id: format!("a{image:04}"),
            label: label(l),
            bbox: random_box(&mut rng, slot),
        });
    }

    // Detections on annotated images: mostly hits, some misses and confusions.
    let mut detections = Vec::new();
    for gt in &annotations {
        if rng.random_bool(0.85) {
            detections.push(DetectionRecord {
                image_id: gt.image_id.clone(),
                label: gt.label.clone(),
                bbox: jitter(&mut rng, &gt.bbox),
                confidence: confidence(&mut rng, 0.45, 1.0),
            });
        }
        if rng.random_bool(0.12) {
            let other = ANNOTATION_COUNTS[rng.random_range(0..ANNOTATION_COUNTS.len())].0;
            detections.push(DetectionRecord {
                image_id: gt.image_id.clone(),
                label: label(other),
                bbox: jitter(&mut rng, &gt.bbox),
                confidence: confidence(&mut rng, 0.05, 0.6),
            });
        }
    }

    // Free-standing detections, with a planted land-mine intensity per day.
    let background: Vec<(&str, f64)> = DEFAULT_LABELS
        .iter()
        .map(|l| {
            let w = match *l {
                "military tank" => 8.0,
                "military aircraft" | "soldier" => 3.0,
                "camouflage soldier" | "military vehicle" | "military warship" | "weapon"
                | "military truck" => 1.5,
                "land mine" => 0.3,
                "civilian" | "trench" => 0.1,
                _ => 0.8,
            };
            (*l, w)
        })
        .collect();
    let total_w: f64 = background.iter().map(|(_, w)| w).sum();
    let mine_pulse = Poisson::new(0.8).expect("positive rate");
    let mut mines = vec![0usize; days];
    for (day, images) in day_images.iter().enumerate() {
        for img in images {
            let slots_used = rng.random_range(0..=2);
            for slot in 0..slots_used {
                let mut pick = rng.random_range(0.0..total_w);
                let mut chosen = background[0].0;
                for (l, w) in &background {
                    if pick < *w {
                        chosen = l;
                        break;
                    }
                    pick -= w;
                }
                if chosen == "land mine" {
                    mines[day] += 1;
                }
                detections.push(DetectionRecord {
                    image_id: img.clone(),
                    label: label(chosen),
                    bbox: random_box(&mut rng, slot),
                    confidence: confidence(&mut rng, 0.25, 1.0),
                });
            }
        }
        if !images.is_empty() {
            let extra: f64 = mine_pulse.sample(&mut rng);
            for _ in 0..extra as usize {
                let img = &images[rng.random_range(0..images.len())];
                detections.push(DetectionRecord {
                    image_id: img.clone(),
                    label: label("land mine"),
                    bbox: random_box(&mut rng, 0),
                    confidence: confidence(&mut rng, 0.5, 1.0),
                });
                mines[day] += 1;
            }
        }
    }

    // Events: attack records whose fatalities follow land mines with a lag.
    let attacks = Poisson::new(5.0).expect("positive rate");
    let others = Poisson::new(2.0).expect("positive rate");
    let mut events = Vec::new();
    for day in 0..days {
        let date: NaiveDate = start + Days::new(day as u64);
        let lead = if day >= PLANTED_LEAD_DAYS {
            mines[day - PLANTED_LEAD_DAYS] as f64
        } else {
            0.0
        };
        let n_attacks = 1 + attacks.sample(&mut rng) as usize;
        let fatal: f64 = Poisson::new(10.0 + 12.0 * lead)
            .expect("positive rate")
            .sample(&mut rng);
        let mut split = vec![0u64; n_attacks];
        for _ in 0..fatal as u64 {
            split[rng.random_range(0..n_attacks)] += 1;
        }
        events.extend(split.into_iter().map(|f| EventRecord {
            date,
            kind: EventKind::Attack,
            fatalities: f,
        }));
        for _ in 0..others.sample(&mut rng) as usize {
            events.push(EventRecord {
                date,
                kind: EventKind::Other,
                fatalities: 0,
            });
        }
    }

    FixtureBundle {
        posts,
        detections,
        annotations,
        events,
    }
}
