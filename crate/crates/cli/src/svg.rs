//! Two-panel polyline plot of a `t`-scan: energies on top, `λ₁` and
//! `s/(n-1)` below, with the critical parameter marked in both.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const PANEL_H: f64 = 230.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const GAP: f64 = 60.0;
const TICKS: usize = 5;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel<'a> {
    pub title: &'a str,
    pub series: Vec<Series<'a>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

/// Renders `panels` stacked vertically over the shared `t` axis.
/// `metadata` is embedded verbatim (escaped) in a `<metadata>` element.
pub fn plot(panels: &[Panel], t_range: (f64, f64), critical_t: f64, metadata: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + panels.len() as f64 * (PANEL_H + GAP);
    let (t0, t1) = if t_range.1 > t_range.0 { t_range } else { (t_range.0 - 0.5, t_range.0 + 0.5) };
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(metadata));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, panel) in panels.iter().enumerate() {
        let top = TOP + p as f64 * (PANEL_H + GAP);
        let bottom = top + PANEL_H;
        let (y0, y1) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
        let sy = |v: f64| bottom - (v - y0) / (y1 - y0) * PANEL_H;
        let _ =
            writeln!(s, r#"<text x="{LEFT}" y="{:.2}" font-weight="bold">{}</text>"#, top - 8.0, escape(panel.title));
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{top:.2}" width="{plot_w:.2}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        for i in 0..TICKS {
            let frac = i as f64 / (TICKS - 1) as f64;
            let t = t0 + frac * (t1 - t0);
            let v = y0 + frac * (y1 - y0);
            let (x, y) = (sx(t), sy(v));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                bottom + 5.0
            );
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.3}</text>"#, bottom + 18.0);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#, LEFT - 8.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
            LEFT + plot_w / 2.0,
            bottom + 34.0
        );
        if critical_t >= t0 && critical_t <= t1 {
            let x = sx(critical_t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#c00" stroke-dasharray="6,4"/>"##
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.2}" y="{:.2}" fill="#c00">t = {critical_t:.4}</text>"##,
                x + 4.0,
                top + 14.0
            );
        }
        for (i, series) in panel.series.iter().enumerate() {
            if series.points.is_empty() {
                continue;
            }
            let pts: Vec<String> = series.points.iter().map(|&(t, v)| format!("{:.2},{:.2}", sx(t), sy(v))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                series.color,
                pts.join(" ")
            );
            let ly = top + 16.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
                lx + 20.0,
                series.color
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(series.label));
        }
    }
    s.push_str("</svg>\n");
    s
}
