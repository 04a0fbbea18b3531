//! Deterministic SVG emitters for the critical-difference diagram and the
//! RMSE-versus-S curves.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maximal runs of rank-sorted methods whose spread is below `cd`, keeping
/// only those with at least two members. Returned as index pairs into the
/// sorted order.
pub(crate) fn cd_groups(sorted_ranks: &[f64], cd: f64) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for i in 0..sorted_ranks.len() {
        let mut j = i;
        while j + 1 < sorted_ranks.len() && sorted_ranks[j + 1] - sorted_ranks[i] < cd {
            j += 1;
        }
        if j > i && groups.last().is_none_or(|&(_, end)| j > end) {
            groups.push((i, j));
        }
    }
    groups
}

/// Critical-difference diagram: a mean-rank axis, one labelled tick per
/// method, and a bold bar over each group not separated by `cd`.
pub fn cd_diagram_svg(names: &[String], mean_ranks: &[f64], cd: Option<f64>) -> Result<String> {
    if names.len() != mean_ranks.len() {
        return Err(Error::LengthMismatch { left: names.len(), right: mean_ranks.len() });
    }
    let m = names.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then(names[a].cmp(&names[b])));
    let sorted: Vec<f64> = order.iter().map(|&i| mean_ranks[i]).collect();
    let groups = cd.map(|c| cd_groups(&sorted, c)).unwrap_or_default();

    let hi = m.max(2) as f64;
    let x_of = |r: f64| MARGIN + (r - 1.0) / (hi - 1.0) * (WIDTH - 2.0 * MARGIN);
    let axis_y = 60.0;
    let label_y0 = axis_y + 40.0 + 12.0 * groups.len() as f64;
    let height = label_y0 + 18.0 * m as f64 + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(c) = cd {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="20" x2="{:.2}" y2="20" stroke="black" stroke-width="2"/>"#,
            x_of(1.0),
            x_of(1.0 + c)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="15">CD = {c:.3}</text>"#, x_of(1.0));
    }
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{axis_y}" x2="{:.2}" y2="{axis_y}" stroke="black"/>"#,
        x_of(1.0),
        x_of(hi)
    );
    for r in 1..=hi as usize {
        let x = x_of(r as f64);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{axis_y}" stroke="black"/>"#, axis_y - 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{r}</text>"#, axis_y - 8.0);
    }
    for (g, &(a, b)) in groups.iter().enumerate() {
        let y = axis_y + 14.0 + 12.0 * g as f64;
        let _ = writeln!(
            s,
            r#"<line class="cd-group" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="4"/>"#,
            x_of(sorted[a]) - 3.0,
            x_of(sorted[b]) + 3.0
        );
    }
    for (pos, &i) in order.iter().enumerate() {
        let x = x_of(mean_ranks[i]);
        let y = label_y0 + 18.0 * pos as f64;
        let left = pos < m.div_ceil(2);
        let (tx, anchor) = if left { (MARGIN - 10.0, "end") } else { (WIDTH - MARGIN + 10.0, "start") };
        let _ = writeln!(
            s,
            r#"<polyline class="method" points="{x:.2},{axis_y} {x:.2},{y:.2} {tx:.2},{y:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{} ({:.2})</text>"#,
            if left { tx - 4.0 } else { tx + 4.0 },
            y + 4.0,
            escape(&names[i]),
            mean_ranks[i]
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_cd_diagram(names: &[String], mean_ranks: &[f64], cd: Option<f64>, out_path: &Path) -> Result<()> {
    let svg = cd_diagram_svg(names, mean_ranks, cd)?;
    std::fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}

/// Mean RMSE of the augmented arm over S, with native baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SCurve {
    pub title: String,
    pub s_values: Vec<usize>,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub native_train: f64,
    pub native_test: f64,
}

/// RMSE against S on a log₂ axis: solid polylines for the augmented arm,
/// dashed horizontals for the native baselines.
pub fn s_curve_svg(curve: &SCurve) -> Result<String> {
    let n = curve.s_values.len();
    if n == 0 || curve.train.len() != n || curve.test.len() != n {
        return Err(Error::MissingCells(format!("S curve `{}` is incomplete", curve.title)));
    }
    let height = 360.0;
    let (top, bottom) = (40.0, height - 50.0);
    let xs: Vec<f64> = curve.s_values.iter().map(|&s| (s.max(1) as f64).log2()).collect();
    let (x_lo, x_hi) = (xs[0].min(xs[n - 1]), xs[0].max(xs[n - 1]));
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let all = curve.train.iter().chain(&curve.test).chain([&curve.native_train, &curve.native_test]);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in all {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    let pad = if y_hi > y_lo { 0.05 * (y_hi - y_lo) } else { 0.05 * y_hi.abs().max(1.0) };
    let (y_lo, y_hi) = ((y_lo - pad).max(0.0), y_hi + pad);
    let px = |x: f64| MARGIN + (x - x_lo) / x_span * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&curve.title));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{bottom}" x2="{:.2}" y2="{bottom}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(s, r#"<line x1="{MARGIN}" y1="{top}" x2="{MARGIN}" y2="{bottom}" stroke="black"/>"#);
    for (&sv, &x) in curve.s_values.iter().zip(&xs) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{sv}</text>"#, px(x), bottom + 16.0);
    }
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">S</text>"#, WIDTH / 2.0, height - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">RMSE</text>"#, (top + bottom) / 2.0, (top + bottom) / 2.0);
    for (class, base, colour) in [("native-train", curve.native_train, "#1f77b4"), ("native-test", curve.native_test, "#d62728")] {
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-dasharray="6,4"/>"#,
            WIDTH - MARGIN,
            y = py(base)
        );
    }
    for (class, series, colour) in [("augmented-train", &curve.train, "#1f77b4"), ("augmented-test", &curve.test, "#d62728")] {
        let pts: Vec<String> = xs.iter().zip(series).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline class="{class}" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, r##"<text x="{:.2}" y="{top}" fill="#1f77b4">train</text>"##, WIDTH - MARGIN + 4.0);
    let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#d62728">test</text>"##, WIDTH - MARGIN + 4.0, top + 14.0);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_s_curve(curve: &SCurve, out_path: &Path) -> Result<()> {
    let svg = s_curve_svg(curve)?;
    std::fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}
