//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use materiel_pulse::cli::run_with_args;
use materiel_pulse::econ::{
    bonferroni, bonferroni_threshold, f_sf, fit_var, granger_test, irf, irf_bands,
    BootstrapOptions, GrangerResult, VarData, VarModel,
};
use materiel_pulse::eval::{average_precision, match_detections, pr_curve_from_outcomes, PrPoint};
use materiel_pulse::ingest::{AnnotationRecord, BBox, ClassLabel, DetectionRecord};
use materiel_pulse::simgen::{
    simulate_lagged_pair, simulate_var_data, synth_fixture_bundle, SimSpec,
};
use materiel_pulse::timeseries::{class_counts, normalize_shares, CountOptions, CountUnit};
use nalgebra::{DMatrix, DVector};

use common::{f_sf_quadrature, max_matching, Rect};

type Check = fn() -> (bool, String);

fn main() {
    let checks: [(&str, Check); 10] = [
        ("output schemas", schema_conformance),
        ("detection matching and AP", detection_eval),
        ("F survival function", f_distribution),
        ("Granger power and size", granger_power_size),
        ("VAR coefficient recovery", var_recovery),
        ("IRF exactness", irf_exactness),
        ("IRF band coverage", band_coverage),
        ("Bonferroni threshold", bonferroni_rule),
        ("share normalization", normalization),
        ("report determinism", report_determinism),
    ];
    let mut passed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        passed += ok as usize;
        println!(
            "{} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", checks.len());
    if passed != checks.len() {
        std::process::exit(1);
    }
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["materiel-pulse"];
    full.extend_from_slice(args);
    let code = run_with_args(full, &mut out, &mut err);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

fn schema_conformance() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run_cli(&["simgen", "--seed", "3", "--out-dir", &p(d)]).0, 0);
    let (posts, dets, anns, events) = (
        d.join("posts.jsonl"),
        d.join("detections.csv"),
        d.join("annotations.csv"),
        d.join("events.csv"),
    );
    let mut problems = Vec::new();

    let (code, eval) = run_cli(&[
        "eval",
        "--detections",
        &p(&dets),
        "--annotations",
        &p(&anns),
    ]);
    let lines: Vec<&str> = eval.lines().collect();
    if code != 0
        || lines[0] != "class,instances,precision,recall,ap,f1"
        || !lines.last().unwrap().starts_with("ALL,")
    {
        problems.push("eval");
    }
    if lines[1..].iter().any(|l| l.split(',').count() != 6) {
        problems.push("eval row width");
    }

    let (code, eng) = run_cli(&[
        "engagement",
        "--posts",
        &p(&posts),
        "--detections",
        &p(&dets),
    ]);
    let lines: Vec<&str> = eng.lines().filter(|l| !l.starts_with('#')).collect();
    if code != 0
        || lines[0]
            != "class,n,mean_retweets,mean_likes,log_mean_retweets,log_sd_retweets,log_mean_likes,log_sd_likes"
        || lines[1..].iter().any(|l| l.split(',').count() != 8)
    {
        problems.push("engagement");
    }

    let series = d.join("series.csv");
    let args = [
        "series",
        "--posts",
        &p(&posts),
        "--detections",
        &p(&dets),
        "--events",
        &p(&events),
    ];
    let (code, text) = run_cli(&args);
    std::fs::write(&series, text).unwrap();
    let (code2, granger) = run_cli(&[
        "granger",
        "--series",
        &p(&series),
        "--cause",
        "share:land mine",
        "--effect",
        "fatalities",
        "--both-directions",
    ]);
    let lines: Vec<&str> = granger.lines().collect();
    let forward = lines
        .iter()
        .filter(|l| l.starts_with("share:land mine,fatalities,"))
        .count();
    let backward = lines
        .iter()
        .filter(|l| l.starts_with("fatalities,share:land mine,"))
        .count();
    if code != 0
        || code2 != 0
        || lines[0] != "cause,effect,lag,f_stat,p_value,significant"
        || forward != 7
        || backward != 7
        || lines[1..].iter().any(|l| l.split(',').count() != 6)
    {
        problems.push("granger");
    }
    (
        problems.is_empty(),
        if problems.is_empty() {
            "eval/engagement/granger headers and row widths match; 7 Granger rows per direction"
                .into()
        } else {
            format!("mismatch in {problems:?}")
        },
    )
}

/// (class, box) for annotations and (class, box, confidence) for detections.
struct Scene {
    gts: Vec<(usize, Rect)>,
    dets: Vec<(usize, Rect, f64)>,
}

const SCENE_CLASSES: [&str; 2] = ["military tank", "rpg"];

fn scenes() -> Vec<Scene> {
    let sq = |x: f64, y: f64, s: f64| (x, y, x + s, y + s);
    let g = |c, r| (c, r);
    let d = |c, r, conf| (c, r, conf);
    vec![
        // single exact hit
        Scene {
            gts: vec![g(0, sq(0., 0., 10.))],
            dets: vec![d(0, sq(0., 0., 10.), 0.9)],
        },
        // duplicate on one object
        Scene {
            gts: vec![g(0, sq(0., 0., 10.))],
            dets: vec![d(0, sq(0., 0., 10.), 0.9), d(0, sq(0., 0., 10.), 0.8)],
        },
        // IoU 0.3 below threshold
        Scene {
            gts: vec![g(0, (0., 0., 10., 10.))],
            dets: vec![d(0, (0., 0., 10., 3.), 0.9)],
        },
        // misses only
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(50., 50., 10.))],
            dets: vec![],
        },
        // detections of a class with no ground truth
        Scene {
            gts: vec![g(0, sq(0., 0., 10.))],
            dets: vec![d(1, sq(0., 0., 10.), 0.7), d(1, sq(30., 0., 10.), 0.6)],
        },
        // two objects, two hits
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(40., 0., 10.))],
            dets: vec![d(0, sq(1., 0., 10.), 0.9), d(0, sq(41., 1., 10.), 0.8)],
        },
        // two objects, lower confidence on the better box
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(40., 0., 10.))],
            dets: vec![d(0, sq(40., 0., 10.), 0.4), d(0, sq(2., 2., 10.), 0.95)],
        },
        // wrong class over the object
        Scene {
            gts: vec![g(0, sq(0., 0., 10.))],
            dets: vec![d(1, sq(0., 0., 10.), 0.9)],
        },
        // IoU exactly at the threshold
        Scene {
            gts: vec![g(0, (0., 0., 10., 10.))],
            dets: vec![d(0, (0., 0., 10., 5.), 0.9)],
        },
        // IoU just under the threshold
        Scene {
            gts: vec![g(0, (0., 0., 10., 10.))],
            dets: vec![d(0, (0., 0., 10., 4.9), 0.9)],
        },
        // three in a row, all shifted
        Scene {
            gts: vec![
                g(0, sq(0., 0., 10.)),
                g(0, sq(20., 0., 10.)),
                g(0, sq(40., 0., 10.)),
            ],
            dets: vec![
                d(0, sq(1., 1., 10.), 0.5),
                d(0, sq(21., 1., 10.), 0.6),
                d(0, sq(39., 1., 10.), 0.7),
            ],
        },
        // both classes, one hit each
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(1, sq(30., 30., 8.))],
            dets: vec![d(0, sq(0., 1., 10.), 0.8), d(1, sq(30., 31., 8.), 0.85)],
        },
        // one far false positive
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(20., 0., 10.))],
            dets: vec![
                d(0, sq(0., 0., 10.), 0.9),
                d(0, sq(20., 0., 10.), 0.8),
                d(0, sq(90., 90., 5.), 0.99),
            ],
        },
        // three exact hits
        Scene {
            gts: vec![
                g(0, sq(0., 0., 10.)),
                g(0, sq(20., 0., 10.)),
                g(0, sq(40., 0., 10.)),
            ],
            dets: vec![
                d(0, sq(0., 0., 10.), 0.3),
                d(0, sq(20., 0., 10.), 0.2),
                d(0, sq(40., 0., 10.), 0.1),
            ],
        },
        // nested boxes, IoU 0.25
        Scene {
            gts: vec![g(0, sq(0., 0., 20.))],
            dets: vec![d(0, sq(5., 5., 10.), 0.9)],
        },
        // overlapping objects, each detection closest to its own
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(6., 0., 10.))],
            dets: vec![d(0, sq(0., 0., 10.), 0.9), d(0, sq(6., 0., 10.), 0.8)],
        },
        // five detections on one object
        Scene {
            gts: vec![g(0, sq(0., 0., 10.))],
            dets: vec![
                d(0, sq(0., 0., 10.), 0.9),
                d(0, sq(1., 0., 10.), 0.8),
                d(0, sq(2., 0., 10.), 0.7),
                d(0, sq(0., 2., 10.), 0.6),
                d(0, sq(1., 1., 10.), 0.5),
            ],
        },
        // three objects, one detection
        Scene {
            gts: vec![
                g(0, sq(0., 0., 10.)),
                g(0, sq(20., 0., 10.)),
                g(0, sq(40., 0., 10.)),
            ],
            dets: vec![d(0, sq(20., 0., 10.), 0.6)],
        },
        // ground truth of the other class only
        Scene {
            gts: vec![g(1, sq(0., 0., 10.))],
            dets: vec![],
        },
        // two classes stacked on one location
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(1, sq(0., 0., 10.))],
            dets: vec![d(0, sq(0., 0., 10.), 0.9), d(1, sq(0., 0., 10.), 0.9)],
        },
        // class swap at two locations
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(1, sq(30., 0., 10.))],
            dets: vec![d(1, sq(0., 0., 10.), 0.9), d(0, sq(30., 0., 10.), 0.8)],
        },
        // moderate shifts, IoU about 0.68
        Scene {
            gts: vec![g(0, sq(0., 0., 10.)), g(0, sq(50., 50., 10.))],
            dets: vec![d(0, sq(2., 0., 10.), 0.7), d(0, sq(50., 52., 10.), 0.75)],
        },
        // one of three below threshold
        Scene {
            gts: vec![
                g(0, sq(0., 0., 10.)),
                g(0, sq(20., 0., 10.)),
                g(1, sq(40., 0., 10.)),
            ],
            dets: vec![
                d(0, sq(0., 0., 10.), 0.9),
                d(0, sq(26., 0., 10.), 0.8),
                d(1, sq(40., 0., 10.), 0.7),
            ],
        },
        // chain of partial overlaps
        Scene {
            gts: vec![
                g(0, (0., 0., 10., 10.)),
                g(0, (8., 0., 18., 10.)),
                g(0, (16., 0., 26., 10.)),
            ],
            dets: vec![
                d(0, (0., 0., 10., 10.), 0.9),
                d(0, (8., 0., 18., 10.), 0.85),
                d(0, (16., 0., 26., 10.), 0.8),
            ],
        },
        // small objects, large offsets
        Scene {
            gts: vec![g(1, sq(0., 0., 4.)), g(1, sq(10., 10., 4.))],
            dets: vec![d(1, sq(1., 1., 4.), 0.6), d(1, sq(12., 12., 4.), 0.65)],
        },
    ]
}

fn to_records(scene: &Scene, image: &str) -> (Vec<DetectionRecord>, Vec<AnnotationRecord>) {
    let bbox = |r: Rect| BBox::new(r.0, r.1, r.2, r.3).unwrap();
    let label = |c: usize| ClassLabel::new(SCENE_CLASSES[c]).unwrap();
    let dets = scene
        .dets
        .iter()
        .map(|&(c, r, conf)| DetectionRecord {
            image_id: image.into(),
            label: label(c),
            bbox: bbox(r),
            confidence: conf,
        })
        .collect();
    let gts = scene
        .gts
        .iter()
        .map(|&(c, r)| AnnotationRecord {
            image_id: image.into(),
            label: label(c),
            bbox: bbox(r),
        })
        .collect();
    (dets, gts)
}

fn detection_eval() -> (bool, String) {
    let start = Instant::now();
    let all = scenes();
    assert_eq!(all.len(), 25);
    let mut agree = 0;
    for (i, scene) in all.iter().enumerate() {
        assert!(scene.gts.len() + scene.dets.len() <= 6);
        let (dets, gts) = to_records(scene, &format!("scene{i}"));
        let result = match_detections(&dets, &gts, 0.5);
        let ok = (0..SCENE_CLASSES.len()).all(|c| {
            let d: Vec<Rect> = scene
                .dets
                .iter()
                .filter(|x| x.0 == c)
                .map(|x| x.1)
                .collect();
            let g: Vec<Rect> = scene.gts.iter().filter(|x| x.0 == c).map(|x| x.1).collect();
            let tp = max_matching(&d, &g, 0.5);
            let label = ClassLabel::new(SCENE_CLASSES[c]).unwrap();
            match result.classes.get(&label) {
                Some(m) => {
                    m.true_positives == tp
                        && m.false_positives == d.len() - tp
                        && m.false_negatives == g.len() - tp
                }
                None => d.is_empty() && g.is_empty(),
            }
        });
        agree += ok as usize;
    }

    let fixtures: [(&[bool], Vec<PrPoint>, f64); 3] = [
        (&[true], vec![(1.0, 1.0).into()], 1.0),
        (
            &[true, false],
            vec![(1.0, 1.0).into(), (1.0, 0.5).into()],
            1.0,
        ),
        (
            &[false, true],
            vec![(0.0, 0.0).into(), (1.0, 0.5).into()],
            0.5,
        ),
    ];
    let mut ap_ok = 0;
    for (outcomes, curve, ap) in &fixtures {
        let got = pr_curve_from_outcomes(outcomes, 1).unwrap();
        if &got == curve && (average_precision(&got) - ap).abs() <= 1e-12 {
            ap_ok += 1;
        }
    }
    let elapsed = start.elapsed();
    (
        agree == 25 && ap_ok == 3 && elapsed < Duration::from_secs(1),
        format!(
            "{agree}/25 scenes match brute-force assignment, {ap_ok}/3 AP fixtures within 1e-12, {:.3}s (limit 1s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn f_distribution() -> (bool, String) {
    let start = Instant::now();
    let mut half_err: f64 = 0.0;
    for d in [1u32, 2, 5, 10, 50] {
        half_err = half_err.max((f_sf(1.0, d, d).unwrap() - 0.5).abs());
    }
    let dfs = [1u32, 2, 5, 20];
    let xs: Vec<f64> = (0..20)
        .map(|i| 0.1 * 100f64.powf(i as f64 / 19.0))
        .collect();
    let mut grid_err: f64 = 0.0;
    let mut worst = (0.0, 0, 0);
    for &x in &xs {
        for &d1 in &dfs {
            for &d2 in &dfs {
                let e = (f_sf(x, d1, d2).unwrap() - f_sf_quadrature(x, d1, d2)).abs();
                if e > grid_err {
                    grid_err = e;
                    worst = (x, d1, d2);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    (
        half_err <= 1e-10 && grid_err <= 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "max |f_sf(1,d,d) - 0.5| = {half_err:.1e} (tol 1e-10); max quadrature gap {grid_err:.1e} at x={:.3}, d1={}, d2={} over 20 x 16 grid (tol 1e-8); {:.2}s (limit 5s)",
            worst.0,
            worst.1,
            worst.2,
            elapsed.as_secs_f64()
        ),
    )
}

fn min_p(results: &[GrangerResult]) -> f64 {
    results.iter().map(|r| r.p_value).fold(1.0, f64::min)
}

fn granger_power_size() -> (bool, String) {
    let start = Instant::now();
    let (mut power_ok, mut null_ok, mut both) = (0, 0, 0);
    for seed in 0..100 {
        let (x, y) = simulate_lagged_pair(0.8, 2, 500, seed).unwrap();
        let forward = granger_test("x", &x, "y", &y, 7).unwrap();
        let backward = granger_test("y", &y, "x", &x, 7).unwrap();
        let a = forward
            .iter()
            .filter(|r| r.lag >= 2)
            .all(|r| r.p_value < 0.001);
        let b = min_p(&backward) > 0.05;
        power_ok += a as usize;
        null_ok += b as usize;
        both += (a && b) as usize;
    }
    let white = SimSpec::new(vec![DMatrix::zeros(2, 2)], DMatrix::identity(2, 2), 500, 0).unwrap();
    let mut rejections = [0usize; 7];
    for seed in 0..1000 {
        let data = simulate_var_data(&white.clone().with_seed(seed)).unwrap();
        for r in granger_test("x", &data.column(0), "y", &data.column(1), 7).unwrap() {
            rejections[r.lag - 1] += (r.p_value < 0.05) as usize;
        }
    }
    let rates: Vec<f64> = rejections.iter().map(|&r| r as f64 / 1000.0).collect();
    let size_ok = rates.iter().all(|r| (0.03..=0.07).contains(r));
    let elapsed = start.elapsed();
    (
        both >= 95 && size_ok && elapsed < Duration::from_secs(120),
        format!(
            "x->y p<0.001 at all L>=2 on {power_ok}/100, y->x min-p>0.05 on {null_ok}/100, both on {both}/100 (need 95); per-lag null rejection rates {rates:?} (need [0.03, 0.07]); {:.1}s (limit 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn true_a() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2])
}

fn var_recovery() -> (bool, String) {
    let spec = SimSpec::new(vec![true_a()], DMatrix::identity(2, 2), 5000, 0).unwrap();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let data = simulate_var_data(&spec.clone().with_seed(seed)).unwrap();
        let model = fit_var(&data, 1).unwrap();
        let err = (&model.coefficients[0] - true_a()).amax();
        worst = worst.max(err);
        within += (err <= 0.05) as usize;
    }
    let exact_spec = SimSpec::new(vec![true_a()], DMatrix::zeros(2, 2), 20, 0)
        .unwrap()
        .with_burn_in(0)
        .with_initial(vec![DVector::from_column_slice(&[1.0, -2.0])])
        .unwrap();
    let exact = fit_var(&simulate_var_data(&exact_spec).unwrap(), 1).unwrap();
    let exact_err = (&exact.coefficients[0] - true_a())
        .amax()
        .max(exact.intercept.amax());
    (
        within >= 95 && exact_err <= 1e-8,
        format!(
            "{within}/100 seeds within ±0.05 (need 95, worst {worst:.4}); zero-noise max error {exact_err:.1e} (tol 1e-8)"
        ),
    )
}

fn model_with(a: Vec<DMatrix<f64>>) -> VarModel {
    let k = a[0].nrows();
    VarModel {
        names: (1..=k).map(|i| format!("y{i}")).collect(),
        lag_order: a.len(),
        intercept: DVector::zeros(k),
        coefficients: a,
        sigma: DMatrix::identity(k, k),
        residuals: DMatrix::zeros(1, k),
        n_obs: 1,
    }
}

fn irf_exactness() -> (bool, String) {
    let psi = irf(&model_with(vec![true_a()]), 2);
    let expected = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.21, 0.04]);
    let gap = (&psi[2] - &expected).amax();

    let spec = SimSpec::new(vec![true_a()], DMatrix::identity(2, 2), 300, 0).unwrap();
    let mut identity_ok = 0;
    let fits = 20;
    for seed in 0..fits {
        let data: VarData = simulate_var_data(&spec.clone().with_seed(seed)).unwrap();
        for p in 1..=3 {
            let psi0 = &irf(&fit_var(&data, p).unwrap(), 4)[0];
            identity_ok += (*psi0 == DMatrix::identity(2, 2)) as usize;
        }
    }
    (
        gap <= 1e-15 && identity_ok == 3 * fits as usize,
        format!(
            "Psi_2 rows {:?}, {:?} vs [[0.25,0],[0.21,0.04]], max gap {gap:.1e} (tol 1e-15); Psi_0 == I bit-exactly on {identity_ok}/{} fitted models",
            [psi[2][(0, 0)], psi[2][(0, 1)]],
            [psi[2][(1, 0)], psi[2][(1, 1)]],
            3 * fits
        ),
    )
}

fn band_coverage() -> (bool, String) {
    let start = Instant::now();
    let spec = SimSpec::new(vec![true_a()], DMatrix::identity(2, 2), 500, 0).unwrap();
    let trials = 50;
    let mut covered = 0;
    let mut failed_reps = 0;
    for trial in 0..trials {
        let data = simulate_var_data(&spec.clone().with_seed(10_000 + trial)).unwrap();
        let opts = BootstrapOptions {
            horizon: 10,
            reps: 1000,
            seed: trial,
            ..BootstrapOptions::default()
        };
        let bands = irf_bands(&data, 1, &opts).unwrap();
        failed_reps += bands.failed_reps;
        // A[0][1] = 0: y2 never feeds y1
        let r = bands.pair("y2", "y1").unwrap();
        covered += (1..=10).all(|h| r.lower[h] <= 0.0 && 0.0 <= r.upper[h]) as usize;
    }
    let elapsed = start.elapsed();
    let need = (0.9 * trials as f64).ceil() as usize;
    (
        covered >= need && elapsed < Duration::from_secs(300),
        format!(
            "zero response y2 -> y1 inside 95% bands at every h in 1..=10 on {covered}/{trials} trials (need {need}); {failed_reps} failed refits; {:.1}s (limit 300s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn bonferroni_rule() -> (bool, String) {
    let t = bonferroni_threshold(0.05, 17);
    let exact = t.to_bits() == (0.05f64 / 17.0).to_bits();
    let row = |p: f64| GrangerResult {
        cause: "a".into(),
        effect: "b".into(),
        lag: 1,
        f_stat: 1.0,
        p_value: p,
        df_num: 1,
        df_den: 10,
        ssr_restricted: 2.0,
        ssr_unrestricted: 1.0,
        significant_after_correction: false,
    };
    let below = f64::from_bits(t.to_bits() - 1);
    let flagged = bonferroni(vec![row(below), row(t), row(0.01)], 0.05, 17).unwrap();
    let flags: Vec<bool> = flagged
        .iter()
        .map(|r| r.significant_after_correction)
        .collect();
    (
        exact && flags == [true, false, false],
        format!("threshold {t:?} == 0.05/17 bitwise: {exact}; flags for p = (t-ulp, t, 0.01): {flags:?}"),
    )
}

fn normalization() -> (bool, String) {
    let mut fixtures = 0;
    let mut worst: f64 = 0.0;
    let mut zero_days = 0;
    let mut bad = 0;
    let windows = [
        (
            NaiveDate::from_ymd_opt(2022, 2, 21).unwrap(),
            NaiveDate::from_ymd_opt(2022, 12, 31).unwrap(),
        ),
        // starts before the first post, so the leading days are empty
        (
            NaiveDate::from_ymd_opt(2022, 2, 1).unwrap(),
            NaiveDate::from_ymd_opt(2022, 3, 15).unwrap(),
        ),
    ];
    for seed in 0..4 {
        let bundle = synth_fixture_bundle(seed);
        for unit in [CountUnit::Boxes, CountUnit::Images, CountUnit::Posts] {
            for conf in [0.0, 0.5, 0.9] {
                for (start, end) in windows {
                    fixtures += 1;
                    let opts = CountOptions {
                        conf_threshold: conf,
                        unit,
                    };
                    let (counts, _) =
                        class_counts(&bundle.posts, &bundle.detections, &opts, start, end).unwrap();
                    let shares = normalize_shares(&counts);
                    let flag = shares.zero_day_series();
                    for i in 0..counts.len() {
                        let total: f64 = counts.series().iter().map(|s| s.values[i]).sum();
                        let sum: f64 = shares.set.series().iter().map(|s| s.values[i]).sum();
                        if total > 0.0 {
                            worst = worst.max((sum - 1.0).abs());
                            bad += (flag.values[i] != 0.0) as usize;
                        } else {
                            zero_days += 1;
                            let all_zero = shares.set.series().iter().all(|s| s.values[i] == 0.0);
                            bad += (!all_zero || flag.values[i] != 1.0) as usize;
                        }
                    }
                }
            }
        }
    }
    (
        worst <= 1e-12 && bad == 0 && zero_days > 0,
        format!(
            "{fixtures} fixtures: max |sum - 1| on nonzero days {worst:.1e} (tol 1e-12); {zero_days} zero days all-zero and flagged; {bad} violations"
        ),
    )
}

const REPORT_FILES: [&str; 6] = [
    "eval.csv",
    "engagement.csv",
    "series.csv",
    "granger.csv",
    "irf.csv",
    "irf.svg",
];

fn read_report(dir: &Path) -> BTreeMap<&'static str, Vec<u8>> {
    REPORT_FILES
        .iter()
        .map(|f| (*f, std::fs::read(dir.join(f)).unwrap_or_default()))
        .collect()
}

fn report_determinism() -> (bool, String) {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    let spawn = |args: &[String]| {
        Command::new(common::bin())
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
    };
    let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(
        spawn(&owned(&[
            "simgen",
            "--quiet",
            "--seed",
            "21",
            "--out-dir",
            &p(&input)
        ])),
        Some(0)
    );
    let report_args = |out: &Path| {
        owned(&[
            "report",
            "--quiet",
            "--seed",
            "21",
            "--posts",
            &p(&input.join("posts.jsonl")),
            "--detections",
            &p(&input.join("detections.csv")),
            "--annotations",
            &p(&input.join("annotations.csv")),
            "--events",
            &p(&input.join("events.csv")),
            "--out-dir",
            &p(out),
        ])
    };
    let mut runs = Vec::new();
    for i in 0..2 {
        let out = root.path().join(format!("process{i}"));
        assert_eq!(spawn(&report_args(&out)), Some(0));
        runs.push(read_report(&out));
    }
    for i in 0..2 {
        let out = root.path().join(format!("inproc{i}"));
        let args = report_args(&out);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(run_cli(&refs).0, 0);
        runs.push(read_report(&out));
    }
    let complete = runs[0].values().all(|b| !b.is_empty());
    let identical = runs.iter().all(|r| r == &runs[0]);
    let bytes: usize = runs[0].values().map(Vec::len).sum();
    (
        complete && identical,
        format!(
            "{} files ({bytes} bytes) byte-identical across 2 separate processes and 2 in-process runs: {identical}",
            REPORT_FILES.len()
        ),
    )
}
