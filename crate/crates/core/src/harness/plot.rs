//! Standalone SVG line charts of traces and aggregates.

use std::fmt::Write as _;

use super::csvio::{read_aggregates, read_trace, TRACE_HEADER};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Half-width of the shaded band around `y`.
    pub band: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn plot_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn header_of(text: &str) -> Option<&str> {
    text.lines().next().map(str::trim_end)
}

/// Build a chart from CSV files that share one schema.
///
/// Traces plot per-episode regret against the episode (per-step regret
/// against the step when no episode completed). Aggregates plot the mean
/// final regret against the last axis column, one series per combination
/// of the other axes, with the standard error shaded.
pub fn chart_from_csv(files: &[(String, String)]) -> Result<Chart> {
    let (first_path, first) = files.first().ok_or_else(|| Error::InvalidConfig("no csv files to plot".into()))?;
    let header = header_of(first).filter(|h| !h.is_empty()).ok_or_else(|| plot_err(first_path, "empty file"))?;
    for (path, text) in files {
        if header_of(text) != Some(header) {
            return Err(plot_err(path, format!("schema differs from {first_path}")));
        }
    }
    if header == TRACE_HEADER.join(",") {
        let traces = files
            .iter()
            .map(|(path, text)| read_trace(text.as_bytes(), path))
            .collect::<Result<Vec<_>>>()?;
        let by_episode = traces.iter().all(|t| !t.episodes.is_empty());
        let x_label = if by_episode { "episode" } else { "step" };
        let series = traces
            .iter()
            .map(|t| {
                let records = if by_episode { &t.episodes } else { &t.steps };
                Series {
                    label: format!("{} seed {}", t.algorithm, t.seed),
                    x: records
                        .iter()
                        .map(|r| if by_episode { r.episode } else { r.step } as f64)
                        .collect(),
                    y: records.iter().map(|r| r.regret).collect(),
                    band: None,
                }
            })
            .collect();
        return Ok(Chart {
            x_label: x_label.into(),
            y_label: "regret".into(),
            series,
        });
    }

    let mut x_label = None;
    let mut series: Vec<Series> = Vec::new();
    for (path, text) in files {
        let rows = read_aggregates(text.as_bytes(), path)?;
        if rows.is_empty() {
            return Err(plot_err(path, "no rows"));
        }
        for row in rows {
            let (x_name, x_raw) = row.axes.last().ok_or_else(|| plot_err(path, "aggregate has no axis column"))?;
            let x: f64 = x_raw
                .parse()
                .map_err(|_| plot_err(path, format!("axis {x_name} value {x_raw:?} is not numeric")))?;
            x_label.get_or_insert_with(|| x_name.clone());
            let mut label = row.config_id.split(';').next().unwrap_or("").to_string();
            for (k, v) in &row.axes[..row.axes.len() - 1] {
                let _ = write!(label, " {k}={v}");
            }
            let idx = match series.iter().position(|s| s.label == label) {
                Some(i) => i,
                None => {
                    series.push(Series {
                        label,
                        x: Vec::new(),
                        y: Vec::new(),
                        band: Some(Vec::new()),
                    });
                    series.len() - 1
                }
            };
            let s = &mut series[idx];
            s.x.push(x);
            s.y.push(row.final_regret_mean);
            s.band.get_or_insert_with(Vec::new).push(row.final_regret_stderr);
        }
    }
    Ok(Chart {
        x_label: x_label.unwrap_or_default(),
        y_label: "final_regret_mean".into(),
        series,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(chart: &Chart) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 180.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let points = || chart.series.iter().flat_map(|s| s.x.iter().zip(&s.y));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in points() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for s in &chart.series {
        if let Some(b) = &s.band {
            for (y, e) in s.y.iter().zip(b) {
                y0 = y0.min(y - e);
                y1 = y1.max(y + e);
            }
        }
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 10.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&chart.y_label)
    );

    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &s.band {
            let upper = s.x.iter().zip(&s.y).zip(band).map(|((&x, &y), &e)| (sx(x), sy(y + e)));
            let lower: Vec<_> = s.x.iter().zip(&s.y).zip(band).map(|((&x, &y), &e)| (sx(x), sy(y - e))).collect();
            let pts: Vec<String> = upper
                .chain(lower.into_iter().rev())
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}
