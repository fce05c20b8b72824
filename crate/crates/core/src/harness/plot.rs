//! SVG rendering of sweep CSVs: one chart per (experiment, variable), one
//! series per scheme.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{read_csv, Experiment, ResultRow, Scheme, SweepVariable};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 120.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn color(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Ppa => "#d62728",
        Scheme::Epa => "#1f77b4",
        Scheme::Rpa => "#2ca02c",
    }
}

/// One curve. `line` is drawn as a polyline with markers; `extra` as
/// hollow markers only (empirical estimates).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub scheme: Scheme,
    pub line: Vec<(f64, f64)>,
    pub extra: Vec<(f64, f64)>,
}

/// Render every chart found in `csv_path` into `out_dir`, returning the
/// written files in a stable order.
pub fn render_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_csv(csv_path)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: csv_path.to_path_buf(),
            line: 2,
            msg: "no data rows to plot".into(),
        });
    }
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut charts: BTreeMap<(Experiment, SweepVariable), Vec<&ResultRow>> = BTreeMap::new();
    for row in &rows {
        charts.entry((row.experiment, row.variable)).or_default().push(row);
    }
    let mut written = Vec::new();
    for ((experiment, variable), rows) in charts {
        let svg = render_svg(experiment, variable, &series_of(experiment, &rows));
        let path = out_dir.join(format!("{experiment}-{variable}.svg"));
        std::fs::write(&path, svg).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn series_of(experiment: Experiment, rows: &[&ResultRow]) -> Vec<Series> {
    let mut by_scheme: BTreeMap<Scheme, Series> = BTreeMap::new();
    for row in rows {
        let s = by_scheme.entry(row.scheme).or_insert_with(|| Series {
            scheme: row.scheme,
            line: vec![],
            extra: vec![],
        });
        match experiment {
            Experiment::Rate => {
                if let (true, Some(y)) = (row.feasible, row.sum_rate) {
                    s.line.push((row.value, y));
                }
            }
            // detection probability is defined whether or not the rate
            // constraints hold
            Experiment::ValidatePod => {
                if let Some(p) = &row.pod_closed {
                    s.line.push((row.value, mean(p)));
                }
                if let Some(p) = &row.pod_empirical {
                    s.extra.push((row.value, mean(p)));
                }
            }
        }
    }
    for s in by_scheme.values_mut() {
        s.line.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.extra.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    by_scheme.into_values().collect()
}

/// Round a span to 1, 2 or 5 times a power of ten.
fn nice_step(span: f64, target_ticks: f64) -> f64 {
    let raw = span / target_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

/// Standalone SVG document for one chart.
pub fn render_svg(experiment: Experiment, variable: SweepVariable, series: &[Series]) -> String {
    let points = || series.iter().flat_map(|s| s.line.iter().chain(&s.extra));
    let (x0, x1) = range(points().map(|p| p.0));
    let (y0, y1) = range(points().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let x_label = match variable {
        SweepVariable::PowerBudgetDb => "power budget (dB)",
        SweepVariable::PodThreshold => "detection probability threshold",
    };
    let (title, y_label) = match experiment {
        Experiment::Rate => ("Sum rate", "sum rate (bits/s/Hz)"),
        Experiment::ValidatePod => ("Detection probability", "mean detection probability"),
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        MARGIN_LEFT + plot_w / 2.0
    );

    let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}"/>"#
    );
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r##"<g class="ticks" fill="black" stroke="#999">"##);
    let xs = nice_step(x1 - x0, 6.0);
    let mut t = (x0 / xs).ceil() * xs;
    while t <= x1 + 1e-9 * xs {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none">{}</text>"#,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            tick_label(t, xs)
        );
        t += xs;
    }
    let ys = nice_step(y1 - y0, 6.0);
    let mut t = (y0 / ys).ceil() * ys;
    while t <= y1 + 1e-9 * ys {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(t, ys)
        );
        t += ys;
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{y_label}</text>"#,
        MARGIN_TOP + plot_h / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let c = color(s.scheme);
        let _ = writeln!(svg, r#"<g class="series" data-scheme="{}">"#, s.scheme);
        if s.line.len() > 1 {
            let pts: Vec<String> = s
                .line
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for &(x, y) in &s.line {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(x), sy(y));
        }
        for &(x, y) in &s.extra {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{c}"/>"#,
                sx(x) - 3.5,
                sy(y) - 3.5
            );
        }
        let ly = MARGIN_TOP + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            s.scheme.as_str().to_uppercase()
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}
