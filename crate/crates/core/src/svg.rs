//! Small-multiples SVG rendering of impulse responses.

use std::fmt::Write;

use crate::econ::IrfResult;

const CELL_W: f64 = 320.0;
const CELL_H: f64 = 220.0;
const LEFT: f64 = 48.0;
const RIGHT: f64 = 12.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 40.0;

/// Fixed two-decimal formatting with negative zero folded to zero, so
/// output bytes depend only on the values.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn polyline(class: &str, xs: &[f64], ys: &[f64]) -> String {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
        .collect();
    format!("<polyline class=\"{class}\" points=\"{}\"/>", pts.join(" "))
}

fn cell(r: &IrfResult) -> String {
    let h = r.horizon().max(1) as f64;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for v in r
        .point
        .iter()
        .chain(&r.lower)
        .chain(&r.upper)
        .filter(|v| v.is_finite())
    {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = CELL_W - LEFT - RIGHT;
    let plot_h = CELL_H - TOP - BOTTOM;
    let x = |i: usize| LEFT + plot_w * i as f64 / h;
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);
    let xs: Vec<f64> = (0..r.point.len()).map(x).collect();
    let ys = |vals: &[f64]| vals.iter().map(|v| y(*v)).collect::<Vec<_>>();

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<text class=\"title\" x=\"{}\" y=\"18\" text-anchor=\"middle\">{} \u{2192} {}</text>",
        num(CELL_W / 2.0),
        escape(&r.impulse),
        escape(&r.response)
    );
    let _ = writeln!(
        s,
        "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        num(LEFT),
        num(TOP),
        num(plot_w),
        num(plot_h)
    );
    let _ = writeln!(
        s,
        "<line class=\"zero\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\" stroke-width=\"0.8\"/>",
        num(LEFT),
        num(y(0.0)),
        num(LEFT + plot_w),
        num(y(0.0))
    );
    for i in 0..r.point.len() {
        let _ = writeln!(
            s,
            "<line class=\"tick\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#999\"/>\
             <text class=\"tick-label\" x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>",
            num(x(i)),
            num(TOP + plot_h),
            num(TOP + plot_h + 4.0),
            num(TOP + plot_h + 15.0),
            i
        );
    }
    for v in [lo, hi] {
        let _ = writeln!(
            s,
            "<text class=\"y-label\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            num(LEFT - 4.0),
            num(y(v) + 4.0),
            label(v)
        );
    }
    let _ = writeln!(
        s,
        "<text class=\"x-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">days</text>",
        num(LEFT + plot_w / 2.0),
        num(CELL_H - 6.0)
    );
    let band = "fill=\"none\" stroke=\"#1f77b4\" stroke-dasharray=\"4 3\"";
    let _ = writeln!(
        s,
        "{}",
        polyline("band lower", &xs, &ys(&r.lower)).replace("/>", &format!(" {band}/>"))
    );
    let _ = writeln!(
        s,
        "{}",
        polyline("band upper", &xs, &ys(&r.upper)).replace("/>", &format!(" {band}/>"))
    );
    let _ = writeln!(
        s,
        "{}",
        polyline("point", &xs, &ys(&r.point)).replace(
            "/>",
            " fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.6\"/>"
        )
    );
    s
}

/// One cell per response path, two cells per row (one for a single
/// path). Each cell has a solid point line, dashed bands, a zero line
/// and a horizon axis in days.
pub fn render_irf_svg(results: &[IrfResult]) -> String {
    let cols = results.len().clamp(1, 2);
    let rows = results.len().div_ceil(cols).max(1);
    let width = CELL_W * cols as f64;
    let height = CELL_H * rows as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" \
         font-family=\"sans-serif\" font-size=\"10\">",
        num(width),
        num(height)
    );
    for (i, r) in results.iter().enumerate() {
        let (cx, cy) = ((i % cols) as f64 * CELL_W, (i / cols) as f64 * CELL_H);
        let _ = writeln!(
            out,
            "<g class=\"cell\" transform=\"translate({},{})\">",
            num(cx),
            num(cy)
        );
        out.push_str(&cell(r));
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
