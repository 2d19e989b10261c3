//! Self-contained SVG plots of study tables.

use std::fmt::Write as _;

use super::csv::CsvTable;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    /// `y` against `x` on log axes, one curve per value of `series`, with an
    /// optional reference line of the given slope.
    LogLog { x: String, y: String, series: Option<String>, reference_slope: Option<f64> },
    /// One bar per row, labelled by `label`.
    Bars { label: String, value: String },
}

impl PlotKind {
    pub fn loglog(x: &str, y: &str) -> Self {
        PlotKind::LogLog { x: x.into(), y: y.into(), series: None, reference_slope: None }
    }

    fn columns(&self) -> Vec<&str> {
        match self {
            PlotKind::LogLog { x, y, series, .. } => {
                let mut c = vec![x.as_str(), y.as_str()];
                c.extend(series.as_deref());
                c
            }
            PlotKind::Bars { label, value } => vec![label.as_str(), value.as_str()],
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(title: &str, hash: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, esc(title));
        let _ = writeln!(out, r##"<text x="{}" y="{}" text-anchor="end" font-size="9" fill="#666">config {}</text>"##, WIDTH - 8.0, HEIGHT - 8.0, esc(hash));
        Self { out }
    }

    fn frame(&mut self, xlabel: &str, ylabel: &str) {
        let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let _ = writeln!(self.out, r#"<rect x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
        let _ = writeln!(self.out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + w / 2.0, HEIGHT - 22.0, esc(xlabel));
        let _ = writeln!(
            self.out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + h / 2.0,
            TOP + h / 2.0,
            esc(ylabel)
        );
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(self.out, r##"<text x="{}" y="{}" text-anchor="middle" font-size="16" fill="#888">{}</text>"##, WIDTH / 2.0, HEIGHT / 2.0, esc(text));
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Range of `log10` values, widened to at least one decade around the data.
fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3e}");
    match s.split_once('e') {
        Some((m, e)) => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
        None => s,
    }
}

/// Renders a plot of `table`. The axes carry the column names and the
/// `config_sha256` provenance entry; a table without plottable rows gives a
/// valid document annotated "no data".
pub fn render_svg(table: &CsvTable, kind: &PlotKind, title: &str) -> Result<String> {
    for c in kind.columns() {
        if table.column_index(c).is_none() {
            return Err(Error::Plot(format!("column `{c}` missing from table with header {:?}", table.header)));
        }
    }
    let hash = table.provenance.iter().find(|(k, _)| k == "config_sha256").map_or("unknown", |(_, v)| v.as_str());
    let mut canvas = Canvas::new(title, hash);
    match kind {
        PlotKind::LogLog { x, y, series, reference_slope } => {
            canvas.frame(&format!("{x} (log)"), &format!("{y} (log)"));
            let xs = table.column(x)?;
            let ys = table.column(y)?;
            let keys: Vec<String> = match series {
                Some(s) => {
                    let j = table.column_index(s).unwrap_or(0);
                    table.rows.iter().map(|r| r[j].to_string()).collect()
                }
                None => vec![String::new(); table.rows.len()],
            };
            let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for ((px, py), k) in xs.iter().zip(&ys).zip(&keys) {
                if let (Some(px), Some(py)) = (px, py) {
                    if *px > 0.0 && *py > 0.0 && px.is_finite() && py.is_finite() {
                        match groups.iter_mut().find(|(g, _)| g == k) {
                            Some((_, pts)) => pts.push((*px, *py)),
                            None => groups.push((k.clone(), vec![(*px, *py)])),
                        }
                    }
                }
            }
            if groups.is_empty() {
                canvas.note("no data");
                return Ok(canvas.finish());
            }
            let all = || groups.iter().flat_map(|(_, p)| p.iter().copied());
            let (x0, x1) = log_range(all().map(|p| p.0));
            let (y0, y1) = log_range(all().map(|p| p.1));
            let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
            let sx = |v: f64| LEFT + (v.log10() - x0) / (x1 - x0) * w;
            let sy = |v: f64| TOP + h - (v.log10() - y0) / (y1 - y0) * h;
            for d in (x0 as i32)..=(x1 as i32) {
                let px = sx(10f64.powi(d));
                let _ = writeln!(canvas.out, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, TOP + h, TOP + h + 5.0);
                let _ = writeln!(canvas.out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">1e{d}</text>"#, TOP + h + 18.0);
            }
            for d in (y0 as i32)..=(y1 as i32) {
                let py = sy(10f64.powi(d));
                let _ = writeln!(canvas.out, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
                let _ = writeln!(canvas.out, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 8.0, py + 4.0);
            }
            if let Some(s) = reference_slope {
                let (ax, ay) = groups[0].1[0];
                let (lo, hi) = (10f64.powf(x0), 10f64.powf(x1));
                let yr = |v: f64| ay * (v / ax).powf(*s);
                let _ = writeln!(
                    canvas.out,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="6 4"/>"##,
                    sx(lo),
                    sy(yr(lo)).clamp(TOP, TOP + h),
                    sx(hi),
                    sy(yr(hi)).clamp(TOP, TOP + h)
                );
                let _ = writeln!(canvas.out, r##"<text x="{}" y="{}" fill="#999">slope {}</text>"##, WIDTH - RIGHT + 10.0, TOP + 12.0, s);
            }
            for (i, (key, pts)) in groups.iter().enumerate() {
                let color = COLORS[i % COLORS.len()];
                let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b))).collect();
                let _ = writeln!(canvas.out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
                for (a, b) in pts {
                    let _ = writeln!(canvas.out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(*a), sy(*b));
                }
                let label = match series {
                    Some(s) => format!("{s} = {key}"),
                    None => y.clone(),
                };
                let ly = TOP + 32.0 + 16.0 * i as f64;
                let _ = writeln!(canvas.out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, WIDTH - RIGHT + 10.0, ly - 9.0);
                let _ = writeln!(canvas.out, r#"<text x="{}" y="{ly}">{}</text>"#, WIDTH - RIGHT + 26.0, esc(&label));
            }
        }
        PlotKind::Bars { label, value } => {
            canvas.frame(label, value);
            let li = table.column_index(label).unwrap_or(0);
            let vals = table.column(value)?;
            let bars: Vec<(String, f64)> = table
                .rows
                .iter()
                .zip(&vals)
                .filter_map(|(r, v)| v.filter(|v| v.is_finite()).map(|v| (r[li].to_string(), v)))
                .collect();
            if bars.is_empty() {
                canvas.note("no data");
                return Ok(canvas.finish());
            }
            let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
            let top = bars.iter().map(|b| b.1.abs()).fold(0.0, f64::max);
            let top = if top > 0.0 { top } else { 1.0 };
            let slot = w / bars.len() as f64;
            for (i, (name, v)) in bars.iter().enumerate() {
                let bh = v.abs() / top * (h - 10.0);
                let x = LEFT + slot * (i as f64 + 0.2);
                let _ = writeln!(
                    canvas.out,
                    r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{}"/>"#,
                    TOP + h - bh,
                    slot * 0.6,
                    COLORS[0]
                );
                let _ = writeln!(canvas.out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, x + slot * 0.3, TOP + h + 18.0, esc(name));
                let _ = writeln!(canvas.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#, x + slot * 0.3, TOP + h - bh - 4.0, fmt_tick(*v));
            }
        }
    }
    Ok(canvas.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::csv::{LADDER_SCHEMA, SPECTRUM_SCHEMA};

    #[test]
    fn empty_table_says_no_data() {
        let t = CsvTable::new(LADDER_SCHEMA);
        let svg = render_svg(&t, &PlotKind::loglog("eta", "dist_total"), "ladder").unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("no data"));
    }

    #[test]
    fn column_mismatch_is_an_error() {
        let t = CsvTable::new(SPECTRUM_SCHEMA);
        assert!(matches!(render_svg(&t, &PlotKind::loglog("eta", "gap"), "x"), Err(Error::Plot(_))));
    }

    #[test]
    fn series_and_labels() {
        let mut t = CsvTable::new(SPECTRUM_SCHEMA).with_provenance("config_sha256", "abc123");
        for (e, n, g) in [(0.1, 2usize, 2.0), (0.05, 2, 1.0), (0.1, 3, 9.0), (0.05, 3, 5.0)] {
            t.push(vec![e.into(), n.into(), 1.0.into(), 1.0.into(), g.into(), 0.1.into()]).unwrap();
        }
        let kind = PlotKind::LogLog { x: "epsilon".into(), y: "gap".into(), series: Some("n".into()), reference_slope: Some(1.0) };
        let svg = render_svg(&t, &kind, "gaps").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("n = 3") && svg.contains("epsilon (log)") && svg.contains("config abc123"));
        assert!(!svg.contains("href"));
    }
}
