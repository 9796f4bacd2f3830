//! Static SVG line charts of mean error against `n` or `L`.
//!
//! One panel per combination of the coordinates that are not on the x axis
//! (`K`, `M`, and `L` or `n`), one series per method and omega scenario.
//! Failed rows are skipped.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::runner::ResultRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    Nodes,
    Layers,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Between,
    Within,
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 48.0;
const COLUMNS: usize = 2;
const LEGEND_H: f64 = 18.0;
const COLORS: [&str; 8] = [
    "#d62728", "#000000", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
];

type PanelKey = (usize, usize, usize);
type SeriesKey = (String, String);

/// Mean of the metric for every panel, series and x value.
fn aggregate(
    rows: &[ResultRow],
    x: XAxis,
    metric: Metric,
) -> BTreeMap<PanelKey, BTreeMap<SeriesKey, BTreeMap<usize, (f64, usize)>>> {
    let mut panels: BTreeMap<PanelKey, BTreeMap<SeriesKey, BTreeMap<usize, (f64, usize)>>> =
        BTreeMap::new();
    for r in rows {
        let value = match metric {
            Metric::Between => r.err_between,
            Metric::Within => r.r_wl,
        };
        let Some(value) = value else { continue };
        let (xv, other) = match x {
            XAxis::Nodes => (r.n, r.layers),
            XAxis::Layers => (r.layers, r.n),
        };
        let slot = panels
            .entry((r.communities, r.groups, other))
            .or_default()
            .entry((r.method.to_string(), r.omega_scenario.clone()))
            .or_default()
            .entry(xv)
            .or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    panels
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render the chart. Errors when no row carries the metric.
pub fn render_svg(rows: &[ResultRow], x: XAxis, metric: Metric) -> Result<String> {
    let panels = aggregate(rows, x, metric);
    if panels.is_empty() {
        return Err(Error::Validation("no successful rows to plot".into()));
    }
    let series_names: Vec<SeriesKey> = {
        let mut all: Vec<SeriesKey> = panels.values().flat_map(|s| s.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all
    };
    let color = |key: &SeriesKey| {
        let i = series_names.iter().position(|k| k == key).unwrap_or(0);
        COLORS[i % COLORS.len()]
    };
    let (x_name, other_name) = match x {
        XAxis::Nodes => ("n", "L"),
        XAxis::Layers => ("L", "n"),
    };
    let y_name = match metric {
        Metric::Between => "mean between-layer error",
        Metric::Within => "mean within-layer error",
    };

    let cols = COLUMNS.min(panels.len());
    let rows_n = panels.len().div_ceil(cols);
    let legend_h = LEGEND_H * series_names.len() as f64 + 10.0;
    let width = cols as f64 * PANEL_W;
    let height = rows_n as f64 * PANEL_H + legend_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (idx, ((k, m, other), series)) in panels.iter().enumerate() {
        let ox = (idx % cols) as f64 * PANEL_W;
        let oy = (idx / cols) as f64 * PANEL_H;
        let (px0, px1) = (ox + MARGIN, ox + PANEL_W - 16.0);
        let (py0, py1) = (oy + 28.0, oy + PANEL_H - MARGIN + 8.0);

        let xs: Vec<usize> = {
            let mut v: Vec<usize> = series.values().flat_map(|p| p.keys().copied()).collect();
            v.sort();
            v.dedup();
            v
        };
        let (xmin, xmax) = (xs[0] as f64, *xs.last().unwrap() as f64);
        let ymax = series
            .values()
            .flat_map(|p| p.values().map(|(s, c)| s / *c as f64))
            .fold(0.0f64, f64::max)
            .max(1e-3)
            * 1.05;
        let sx = |v: f64| {
            if xmax > xmin {
                px0 + (v - xmin) / (xmax - xmin) * (px1 - px0)
            } else {
                0.5 * (px0 + px1)
            }
        };
        let sy = |v: f64| py1 - v / ymax * (py1 - py0);

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">K={k}, M={m}, {other_name}={other}</text>"#,
            0.5 * (px0 + px1),
            oy + 16.0
        );
        let _ = writeln!(
            svg,
            r#"<polyline points="{px0},{py0} {px0},{py1} {px1},{py1}" fill="none" stroke="black"/>"#
        );
        for &xv in &xs {
            let tx = sx(xv as f64);
            let _ = writeln!(
                svg,
                r#"<line x1="{tx}" y1="{py1}" x2="{tx}" y2="{}" stroke="black"/><text x="{tx}" y="{}" text-anchor="middle">{xv}</text>"#,
                py1 + 4.0,
                py1 + 16.0
            );
        }
        for step in 0..=4 {
            let v = ymax * step as f64 / 4.0;
            let ty = sy(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{ty}" x2="{px0}" y2="{ty}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
                px0 - 4.0,
                px0 - 6.0,
                ty + 4.0,
                v
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{x_name}</text>"#,
            0.5 * (px0 + px1),
            py1 + 32.0
        );
        if idx % cols == 0 {
            let (lx, ly) = (ox + 12.0, 0.5 * (py0 + py1));
            let _ = writeln!(
                svg,
                r#"<text x="{lx}" y="{ly}" text-anchor="middle" transform="rotate(-90 {lx} {ly})">{y_name}</text>"#
            );
        }
        for (key, points) in series {
            let coords: Vec<String> = points
                .iter()
                .map(|(&xv, &(s, c))| format!("{:.2},{:.2}", sx(xv as f64), sy(s / c as f64)))
                .collect();
            let stroke = color(key);
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
            for c in &coords {
                let (cx, cy) = c.split_once(',').expect("x,y");
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{stroke}"/>"#
                );
            }
        }
    }

    let ly0 = rows_n as f64 * PANEL_H + 8.0;
    for (i, key) in series_names.iter().enumerate() {
        let y = ly0 + i as f64 * LEGEND_H;
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{} omega={}</text>"#,
            MARGIN + 24.0,
            color(key),
            MARGIN + 30.0,
            y + 4.0,
            escape(&key.0),
            escape(&key.1)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
