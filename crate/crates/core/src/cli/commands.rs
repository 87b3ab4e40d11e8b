use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use super::output::{Artifacts, Sink};
use super::{
    Command, Diagnostics, EngagementArgs, EvalArgs, FatalityKind, Format, GlobalOptions,
    GrangerArgs, IrfArgs, LagChoice, PrepArgs, RangeArgs, ReportArgs, RunConfig, SeriesArgs,
    SimgenArgs, VarArgs,
};
use crate::econ::{
    bonferroni, fit_var, granger_csv, granger_test, irf_bands, irf_csv, select_lag, var_csv,
    BootstrapOptions, GrangerResult, IrfResult, LagSelection, VarData, VarModel, VAR_COLUMNS,
};
use crate::engagement::{attribute_posts, engagement_csv, engagement_table};
use crate::error::{Error, Result};
use crate::eval::{csv_row, evaluate, EvalOptions};
use crate::ingest::{
    normalize_label, parse_annotations, parse_detections, parse_events, parse_posts, read_source,
    AnnotationRecord, DetectionRecord, EventKind, EventRecord, LabelRules, PostRecord, Vocabulary,
    VOCAB_ENV,
};
use crate::simgen::{simulate_var, synth_fixture_bundle, SimSpec};
use crate::svg::render_irf_svg;
use crate::timeseries::{
    class_counts, default_range, event_series, normalize_shares, CountOptions, SeriesSet,
    ZERO_DAY_COLUMN,
};

pub(super) fn execute(config: &RunConfig, diag: &mut Diagnostics<'_>) -> Result<Artifacts> {
    let g = &config.global;
    match &config.command {
        Command::Eval(a) => eval(g, a, diag),
        Command::Engagement(a) => engagement(g, a, diag),
        Command::Series(a) => series(g, a, diag),
        Command::Granger(a) => granger(g, a),
        Command::Var(a) => var(g, a),
        Command::Irf(a) => irf(g, a, diag),
        Command::Report(a) => report(g, a, diag),
        Command::Simgen(a) => simgen(g, a),
    }
}

fn label_rules(g: &GlobalOptions) -> Result<LabelRules> {
    let path = g.vocab.clone().or_else(|| {
        std::env::var_os(VOCAB_ENV)
            .filter(|v| !v.is_empty())
            .map(Into::into)
    });
    let vocabulary = match path {
        Some(p) => Vocabulary::from_file(&p)?,
        None => Vocabulary::default(),
    };
    Ok(LabelRules {
        vocabulary,
        allow_unknown: g.allow_unknown_labels,
    })
}

fn format_for(g: &GlobalOptions, out: Option<&Path>) -> Format {
    g.format
        .unwrap_or_else(|| match out.and_then(Path::extension) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        })
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Numerical(format!("JSON encoding failed: {e}")))
}

fn render<T: Serialize + ?Sized>(
    fmt: Format,
    value: &T,
    csv: impl FnOnce() -> String,
) -> Result<String> {
    match fmt {
        Format::Csv => Ok(csv()),
        Format::Json => to_json(value),
    }
}

fn single(sink_path: Option<&Path>, content: String) -> Artifacts {
    let mut a = Artifacts::default();
    a.push(Sink::from_arg(sink_path), content);
    a
}

fn resolve_range(r: &RangeArgs) -> Result<(NaiveDate, NaiveDate)> {
    let (ds, de) = default_range();
    let (start, end) = (r.start.unwrap_or(ds), r.end.unwrap_or(de));
    if start > end {
        return Err(Error::InvalidArgument(format!(
            "start date {start} is after end date {end}"
        )));
    }
    Ok((start, end))
}

/// Detections on images that carry at least one annotation.
fn annotated_only(
    dets: Vec<DetectionRecord>,
    gts: &[AnnotationRecord],
    diag: &mut Diagnostics<'_>,
) -> Vec<DetectionRecord> {
    let images: HashSet<&str> = gts.iter().map(|a| a.image_id.as_str()).collect();
    let total = dets.len();
    let kept: Vec<DetectionRecord> = dets
        .into_iter()
        .filter(|d| images.contains(d.image_id.as_str()))
        .collect();
    if kept.len() < total {
        diag.info(
            "unannotated-images",
            format!(
                "{} detections on images without annotations left out of scoring",
                total - kept.len()
            ),
        );
    }
    kept
}

fn eval(g: &GlobalOptions, a: &EvalArgs, diag: &mut Diagnostics<'_>) -> Result<Artifacts> {
    let rules = label_rules(g)?;
    let gts = parse_annotations(&a.annotations, &rules)?;
    let dets = annotated_only(parse_detections(&a.detections, &rules)?, &gts, diag);
    let opts = EvalOptions {
        iou_threshold: a.iou_threshold,
        conf_threshold: a.conf_threshold,
        include_empty_classes: a.include_empty_classes,
    };
    let report = evaluate(&dets, &gts, &opts)?;
    let out = a.out.as_deref();
    Ok(single(
        out,
        render(format_for(g, out), &report, || report.to_csv())?,
    ))
}

fn engagement_output(
    posts: &[PostRecord],
    dets: &[DetectionRecord],
    conf: f64,
    fmt: Format,
    diag: &mut Diagnostics<'_>,
) -> Result<String> {
    let attribution = attribute_posts(posts, dets, conf);
    if attribution.dangling_detections > 0 {
        diag.warn(
            "dangling-images",
            format!(
                "{} detections on {} images that appear in no post were skipped",
                attribution.dangling_detections,
                attribution.dangling_images.len()
            ),
        );
    }
    let rows = engagement_table(posts, &attribution)?;
    render(fmt, &rows, || engagement_csv(&rows))
}

fn engagement(
    g: &GlobalOptions,
    a: &EngagementArgs,
    diag: &mut Diagnostics<'_>,
) -> Result<Artifacts> {
    let rules = label_rules(g)?;
    let posts = parse_posts(&a.posts)?;
    let dets = parse_detections(&a.detections, &rules)?;
    let out = a.out.as_deref();
    let text = engagement_output(&posts, &dets, a.conf_threshold, format_for(g, out), diag)?;
    Ok(single(out, text))
}

struct SeriesInputs<'a> {
    posts: &'a [PostRecord],
    detections: &'a [DetectionRecord],
    events: Option<&'a [EventRecord]>,
    range: (NaiveDate, NaiveDate),
    counts: CountOptions,
    fatality_kind: Option<EventKind>,
}

/// Counts, shares, the zero-day flag and (with events) attacks and
/// fatalities, in that column order.
fn build_series(inp: &SeriesInputs<'_>, diag: &mut Diagnostics<'_>) -> Result<SeriesSet> {
    let (start, end) = inp.range;
    let (counts, orphaned) = class_counts(inp.posts, inp.detections, &inp.counts, start, end)?;
    if orphaned > 0 {
        diag.warn(
            "orphaned-detections",
            format!("{orphaned} detections whose image has no post were skipped"),
        );
    }
    let shares = normalize_shares(&counts);
    if !shares.zero_days.is_empty() {
        diag.info(
            "zero-days",
            format!(
                "{} days without qualifying detections",
                shares.zero_days.len()
            ),
        );
    }
    let zero = shares.zero_day_series();
    let mut set = counts.extend(shares.set.into_series())?.extend([zero])?;
    if let Some(events) = inp.events {
        let (attacks, fatalities) = event_series(events, inp.fatality_kind, start, end)?;
        set = set.extend([attacks, fatalities])?;
    }
    Ok(set)
}

fn series(g: &GlobalOptions, a: &SeriesArgs, diag: &mut Diagnostics<'_>) -> Result<Artifacts> {
    let range = resolve_range(&a.range)?;
    let rules = label_rules(g)?;
    let posts = parse_posts(&a.posts)?;
    let dets = parse_detections(&a.detections, &rules)?;
    let events = a.events.as_deref().map(parse_events).transpose()?;
    let set = build_series(
        &SeriesInputs {
            posts: &posts,
            detections: &dets,
            events: events.as_deref(),
            range,
            counts: CountOptions {
                conf_threshold: a.conf_threshold,
                unit: a.unit,
            },
            fatality_kind: match a.fatality_kind {
                FatalityKind::All => None,
                FatalityKind::Attack => Some(EventKind::Attack),
                FatalityKind::Other => Some(EventKind::Other),
            },
        },
        diag,
    )?;
    let out = a.out.as_deref();
    Ok(single(
        out,
        render(format_for(g, out), &set, || set.to_wide_csv())?,
    ))
}

fn load_set(path: &Path) -> Result<SeriesSet> {
    let name = if path.as_os_str() == "-" {
        "<stdin>".to_string()
    } else {
        path.display().to_string()
    };
    SeriesSet::from_wide_csv(&read_source(path)?, &name)
}

/// Columns `names` after optional differencing and zero-day removal.
fn prepare(set: &SeriesSet, names: &[&str], prep: &PrepArgs) -> Result<VarData> {
    let mut columns = names
        .iter()
        .map(|n| set.require(n).map(|s| s.values.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut flags = if prep.drop_zero_days {
        let flag = set.get(ZERO_DAY_COLUMN).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "--drop-zero-days needs a `{ZERO_DAY_COLUMN}` column"
            ))
        })?;
        Some(flag.values.clone())
    } else {
        None
    };
    if prep.difference {
        if set.len() < 2 {
            return Err(Error::InsufficientData(
                "at least 2 days are needed to difference".into(),
            ));
        }
        for c in &mut columns {
            *c = c.windows(2).map(|w| w[1] - w[0]).collect();
        }
        flags = flags.map(|f| f[1..].to_vec());
    }
    let slices: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let data = VarData::from_columns(names, &slices)?;
    match flags {
        Some(f) => data.filter_rows(&f.iter().map(|&v| v == 0.0).collect::<Vec<_>>()),
        None => Ok(data),
    }
}

fn granger_pairs(
    set: &SeriesSet,
    pairs: &[(String, String)],
    max_lag: usize,
    prep: &PrepArgs,
) -> Result<Vec<GrangerResult>> {
    let mut all = Vec::new();
    for (cause, effect) in pairs {
        let data = prepare(set, &[cause, effect], prep)?;
        all.extend(granger_test(
            cause,
            &data.column(0),
            effect,
            &data.column(1),
            max_lag,
        )?);
    }
    Ok(all)
}

fn granger(g: &GlobalOptions, a: &GrangerArgs) -> Result<Artifacts> {
    let set = load_set(&a.series)?;
    let mut pairs = Vec::new();
    for cause in &a.cause {
        if cause == &a.effect {
            return Err(Error::InvalidArgument(format!(
                "`{cause}` is both cause and effect"
            )));
        }
        pairs.push((cause.clone(), a.effect.clone()));
        if a.both_directions {
            pairs.push((a.effect.clone(), cause.clone()));
        }
    }
    let results = granger_pairs(&set, &pairs, a.max_lag, &a.prep)?;
    let results = bonferroni(results, a.alpha, a.bonferroni_m.unwrap_or(pairs.len()))?;
    let out = a.out.as_deref();
    Ok(single(
        out,
        render(format_for(g, out), &results, || granger_csv(&results))?,
    ))
}

/// One column set per VAR: all columns jointly, or each factor with the
/// last column.
fn model_groups(columns: &[String], joint: bool) -> Result<Vec<Vec<String>>> {
    if columns.len() < 2 {
        return Err(Error::InvalidArgument(
            "--columns needs at least two series".into(),
        ));
    }
    for (i, c) in columns.iter().enumerate() {
        if columns[..i].contains(c) {
            return Err(Error::InvalidArgument(format!("column `{c}` listed twice")));
        }
    }
    if joint {
        return Ok(vec![columns.to_vec()]);
    }
    let (target, factors) = columns.split_last().expect("at least two columns");
    Ok(factors
        .iter()
        .map(|f| vec![f.clone(), target.clone()])
        .collect())
}

fn choose_lag(
    data: &VarData,
    lag: LagChoice,
    max_lag: usize,
) -> Result<(usize, Option<LagSelection>)> {
    match lag {
        LagChoice::Fixed(p) => Ok((p, None)),
        LagChoice::Auto => {
            let sel = select_lag(data, max_lag)?;
            Ok((sel.lag_order, Some(sel)))
        }
    }
}

#[derive(Serialize)]
struct VarFit {
    columns: Vec<String>,
    lag_selection: Option<LagSelection>,
    model: VarModel,
}

fn var_table(fits: &[VarFit]) -> String {
    let mut out = format!("model,{VAR_COLUMNS}\n");
    for f in fits {
        let name = csv_row(&[&f.columns.join("+")]);
        let name = name.trim_end();
        for line in var_csv(&f.model).lines().skip(1) {
            out.push_str(&format!("{name},{line}\n"));
        }
    }
    out
}

fn var(g: &GlobalOptions, a: &VarArgs) -> Result<Artifacts> {
    let m = &a.model;
    let set = load_set(&m.series)?;
    let mut fits = Vec::new();
    for group in model_groups(&m.columns, m.joint)? {
        let names: Vec<&str> = group.iter().map(String::as_str).collect();
        let data = prepare(&set, &names, &m.prep)?;
        let (p, lag_selection) = choose_lag(&data, m.lag, m.max_lag)?;
        fits.push(VarFit {
            model: fit_var(&data, p)?,
            columns: group,
            lag_selection,
        });
    }
    let out = a.out.as_deref();
    Ok(single(
        out,
        render(format_for(g, out), &fits, || var_table(&fits))?,
    ))
}

struct IrfRun<'a> {
    lag: LagChoice,
    max_lag: usize,
    joint: bool,
    prep: &'a PrepArgs,
    opts: BootstrapOptions,
}

/// Cross responses (impulse differs from response) of every model.
fn irf_results(
    set: &SeriesSet,
    columns: &[String],
    run: &IrfRun<'_>,
    diag: &mut Diagnostics<'_>,
) -> Result<Vec<IrfResult>> {
    let mut out = Vec::new();
    for group in model_groups(columns, run.joint)? {
        let names: Vec<&str> = group.iter().map(String::as_str).collect();
        let data = prepare(set, &names, run.prep)?;
        let (p, _) = choose_lag(&data, run.lag, run.max_lag)?;
        let bands = irf_bands(&data, p, &run.opts)?;
        if bands.failed_reps > 0 {
            diag.warn(
                "bootstrap-failures",
                format!(
                    "{}: {} of {} refits failed and were dropped",
                    group.join("+"),
                    bands.failed_reps,
                    bands.reps
                ),
            );
        }
        out.extend(
            bands
                .results
                .into_iter()
                .filter(|r| r.impulse != r.response),
        );
    }
    Ok(out)
}

fn irf(g: &GlobalOptions, a: &IrfArgs, diag: &mut Diagnostics<'_>) -> Result<Artifacts> {
    let m = &a.model;
    let set = load_set(&m.series)?;
    let run = IrfRun {
        lag: m.lag,
        max_lag: m.max_lag,
        joint: m.joint,
        prep: &m.prep,
        opts: BootstrapOptions {
            horizon: a.horizon,
            reps: a.reps,
            seed: g.seed.unwrap_or(0),
            alpha: a.alpha,
            orthogonalized: a.orthogonalized,
        },
    };
    let results = irf_results(&set, &m.columns, &run, diag)?;
    let out = a.out.as_deref();
    let mut artifacts = single(
        out,
        render(format_for(g, out), &results, || irf_csv(&results))?,
    );
    if let Some(svg) = &a.svg {
        artifacts.push(Sink::File(svg.clone()), render_irf_svg(&results));
    }
    Ok(artifacts)
}

const TARGET: &str = "fatalities";

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Share columns of the `n` most frequent classes (ties by name).
fn top_factors(set: &SeriesSet, n: usize) -> Vec<String> {
    let mut totals: Vec<(f64, &str)> = set
        .series()
        .iter()
        .filter_map(|s| {
            s.name
                .strip_prefix("count:")
                .map(|l| (s.values.iter().sum(), l))
        })
        .collect();
    totals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    totals
        .into_iter()
        .take(n)
        .map(|(_, l)| format!("share:{l}"))
        .collect()
}

fn report(g: &GlobalOptions, a: &ReportArgs, diag: &mut Diagnostics<'_>) -> Result<Artifacts> {
    let range = resolve_range(&a.range)?;
    let rules = label_rules(g)?;
    let posts = parse_posts(&a.posts)?;
    let dets = parse_detections(&a.detections, &rules)?;
    let gts = parse_annotations(&a.annotations, &rules)?;
    let events = parse_events(&a.events)?;

    let eval_report = evaluate(
        &annotated_only(dets.clone(), &gts, diag),
        &gts,
        &EvalOptions {
            iou_threshold: a.iou_threshold,
            conf_threshold: a.conf_threshold,
            include_empty_classes: false,
        },
    )?;
    let engagement = engagement_output(&posts, &dets, a.conf_threshold, Format::Csv, diag)?;
    let set = build_series(
        &SeriesInputs {
            posts: &posts,
            detections: &dets,
            events: Some(&events),
            range,
            counts: CountOptions {
                conf_threshold: a.conf_threshold,
                unit: a.unit,
            },
            fatality_kind: None,
        },
        diag,
    )?;

    let mut pairs = Vec::new();
    for s in set.series().iter().filter(|s| s.name.starts_with("share:")) {
        if is_constant(&s.values) {
            diag.warn(
                "constant-series",
                format!("`{}` is constant and was not tested", s.name),
            );
            continue;
        }
        pairs.push((s.name.clone(), TARGET.to_string()));
        pairs.push((TARGET.to_string(), s.name.clone()));
    }
    let mut tested = Vec::new();
    let mut results = Vec::new();
    for pair in pairs {
        match granger_pairs(&set, std::slice::from_ref(&pair), a.max_lag, &a.prep) {
            Ok(r) => {
                results.extend(r);
                tested.push(pair);
            }
            Err(e) if e.is_numerical() => {
                diag.warn("granger-skipped", format!("{} -> {}: {e}", pair.0, pair.1));
            }
            Err(e) => return Err(e),
        }
    }
    if tested.is_empty() {
        return Err(Error::InsufficientData(
            "no share series could be Granger-tested".into(),
        ));
    }
    let results = bonferroni(results, a.alpha, a.bonferroni_m.unwrap_or(tested.len()))?;

    let mut columns = if a.factors.is_empty() {
        top_factors(&set, 3)
    } else {
        a.factors
            .iter()
            .map(|f| format!("share:{}", normalize_label(f)))
            .collect()
    };
    columns.push(TARGET.to_string());
    let run = IrfRun {
        lag: a.lag,
        max_lag: a.max_lag,
        joint: false,
        prep: &a.prep,
        opts: BootstrapOptions {
            horizon: a.horizon,
            reps: a.reps,
            seed: g.seed.unwrap_or(0),
            ..BootstrapOptions::default()
        },
    };
    let irfs = irf_results(&set, &columns, &run, diag)?;

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut artifacts = Artifacts::default();
    let mut put =
        |name: &str, content: String| artifacts.push(Sink::File(a.out_dir.join(name)), content);
    put("eval.csv", eval_report.to_csv());
    put("engagement.csv", engagement);
    put("series.csv", set.to_wide_csv());
    put("granger.csv", granger_csv(&results));
    put("irf.csv", irf_csv(&irfs));
    put("irf.svg", render_irf_svg(&irfs));
    Ok(artifacts)
}

fn simgen(g: &GlobalOptions, a: &SimgenArgs) -> Result<Artifacts> {
    let files = match &a.spec {
        Some(path) => {
            let mut spec = SimSpec::from_json(&read_source(path)?)?;
            if let Some(seed) = g.seed {
                spec = spec.with_seed(seed);
            }
            vec![("series.csv", simulate_var(&spec)?.to_wide_csv())]
        }
        None => synth_fixture_bundle(g.seed.unwrap_or(0)).files(),
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut artifacts = Artifacts::default();
    for (name, content) in files {
        artifacts.push(Sink::File(a.out_dir.join(name)), content);
    }
    Ok(artifacts)
}
