//! Self-contained SVG drawings: policy arrow maps, cost heatmaps, bar charts.

use std::fmt::Write as _;

use dualsys::worlds::GridWorldSpec;

const CELL: f64 = 60.0;
const MARGIN: f64 = 30.0;

fn basin_fill(basin: &str) -> &'static str {
    match basin {
        "kale" => "#b7e4c7",
        "donut" => "#f4c2c2",
        "none" => "#dddddd",
        _ => "#c6d8f0",
    }
}

fn item_fill(label: &str) -> &'static str {
    match label {
        "kale" => "#2d6a4f",
        "donut" => "#c9184a",
        _ => "#1d3557",
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    )
    .unwrap();
}

fn cell_origin(x: usize, y: usize) -> (f64, f64) {
    (MARGIN + x as f64 * CELL, MARGIN + y as f64 * CELL)
}

fn draw_item(out: &mut String, x: usize, y: usize, label: &str) {
    let (ox, oy) = cell_origin(x, y);
    writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
        ox + 6.0,
        oy + 6.0,
        CELL - 12.0,
        CELL - 12.0,
        item_fill(label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="11" fill="white" text-anchor="middle">{}</text>"#,
        ox + CELL / 2.0,
        oy + CELL / 2.0 + 4.0,
        escape(label)
    )
    .unwrap();
}

fn draw_arrow(out: &mut String, x: usize, y: usize, action: usize) {
    let (ox, oy) = cell_origin(x, y);
    let (cx, cy) = (ox + CELL / 2.0, oy + CELL / 2.0);
    // up, down, left, right
    let (dx, dy) = [(0.0, -1.0), (0.0, 1.0), (-1.0, 0.0), (1.0, 0.0)][action];
    let len = CELL * 0.32;
    let (tx, ty) = (cx + dx * len, cy + dy * len);
    let (bx, by) = (cx - dx * len, cy - dy * len);
    writeln!(
        out,
        r#"<line x1="{bx}" y1="{by}" x2="{tx}" y2="{ty}" stroke="black" stroke-width="2"/>"#
    )
    .unwrap();
    let head = 7.0;
    let (px, py) = (-dy, dx);
    writeln!(
        out,
        r#"<polygon points="{},{} {},{} {},{}" fill="black"/>"#,
        tx + dx * head,
        ty + dy * head,
        tx + px * head * 0.7,
        ty + py * head * 0.7,
        tx - px * head * 0.7,
        ty - py * head * 0.7
    )
    .unwrap();
}

fn grid_size(spec: &GridWorldSpec) -> (f64, f64) {
    (
        2.0 * MARGIN + spec.width as f64 * CELL,
        2.0 * MARGIN + spec.height as f64 * CELL,
    )
}

fn outline(out: &mut String, x: usize, y: usize) {
    let (ox, oy) = cell_origin(x, y);
    writeln!(
        out,
        r##"<rect x="{ox}" y="{oy}" width="{CELL}" height="{CELL}" fill="none" stroke="#888888"/>"##
    )
    .unwrap();
}

/// Arrow per cell, cells filled by the item their rollout ends at.
pub fn policy_map(
    spec: &GridWorldSpec,
    title: &str,
    actions: &[Option<usize>],
    basins: &[String],
) -> String {
    let (w, h) = grid_size(spec);
    let mut out = String::new();
    header(&mut out, w, h, title);
    for s in 0..spec.width * spec.height {
        let (x, y) = spec.cell_of(s);
        let (ox, oy) = cell_origin(x, y);
        writeln!(
            out,
            r#"<rect x="{ox}" y="{oy}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
            basin_fill(&basins[s])
        )
        .unwrap();
        outline(&mut out, x, y);
        match spec.items.iter().find(|i| (i.x, i.y) == (x, y)) {
            Some(item) if item.terminal => draw_item(&mut out, x, y, &item.label),
            _ => {
                if let Some(a) = actions[s] {
                    draw_arrow(&mut out, x, y, a);
                }
            }
        }
    }
    for &(x, y) in &spec.starts {
        let (ox, oy) = cell_origin(x, y);
        writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="5" fill="none" stroke="black" stroke-width="2"/>"#,
            ox + 9.0,
            oy + 9.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Per-cell control cost, white (zero) to red (largest value).
pub fn cost_heatmap(spec: &GridWorldSpec, title: &str, costs: &[f64]) -> String {
    let (w, h) = grid_size(spec);
    let max = costs.iter().copied().fold(0.0, f64::max);
    let mut out = String::new();
    header(&mut out, w, h, title);
    for (s, &cost) in costs.iter().enumerate().take(spec.width * spec.height) {
        let (x, y) = spec.cell_of(s);
        let (ox, oy) = cell_origin(x, y);
        if let Some(item) = spec
            .items
            .iter()
            .find(|i| (i.x, i.y) == (x, y) && i.terminal)
        {
            outline(&mut out, x, y);
            draw_item(&mut out, x, y, &item.label);
            continue;
        }
        let t = if max > 0.0 { cost / max } else { 0.0 };
        let shade = (255.0 * (1.0 - t)).round() as u8;
        writeln!(
            out,
            r#"<rect x="{ox}" y="{oy}" width="{CELL}" height="{CELL}" fill="rgb(255,{shade},{shade})"/>"#
        )
        .unwrap();
        outline(&mut out, x, y);
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{:.2}</text>"#,
            ox + CELL / 2.0,
            oy + CELL / 2.0 + 4.0,
            costs[s]
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub struct BarGroup {
    pub label: String,
    /// `(name, mean, sd)`.
    pub bars: Vec<(String, f64, f64)>,
}

/// Grouped bars with one-standard-deviation whiskers.
pub fn bar_chart(title: &str, groups: &[BarGroup]) -> String {
    let bar = 22.0;
    let gap = 30.0;
    let plot_h = 240.0;
    let top = 40.0;
    let left = 50.0;
    let n_bars: usize = groups.iter().map(|g| g.bars.len()).sum();
    let width = left + n_bars as f64 * bar + groups.len() as f64 * gap + 20.0;
    let height = top + plot_h + 70.0;
    let extent = groups
        .iter()
        .flat_map(|g| g.bars.iter())
        .map(|&(_, m, sd)| m.abs() + sd)
        .fold(1e-9, f64::max);
    let zero = top + plot_h / 2.0;
    let scale = plot_h / 2.0 / extent;

    let mut out = String::new();
    header(&mut out, width, height, title);
    writeln!(
        out,
        r#"<line x1="{left}" y1="{zero}" x2="{}" y2="{zero}" stroke="black"/>"#,
        width - 10.0
    )
    .unwrap();
    for (v, y) in [(extent, top), (-extent, top + plot_h)] {
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{v:.2}</text>"#,
            left - 4.0,
            y + 4.0
        )
        .unwrap();
    }
    let mut x = left + gap / 2.0;
    for group in groups {
        let start = x;
        for (name, mean, sd) in &group.bars {
            let y0 = zero.min(zero - mean * scale);
            let fill = if *mean >= 0.0 { "#4c72b0" } else { "#dd8452" };
            writeln!(
                out,
                r#"<rect x="{x}" y="{y0}" width="{}" height="{}" fill="{fill}"/>"#,
                bar - 4.0,
                (mean * scale).abs()
            )
            .unwrap();
            let cx = x + (bar - 4.0) / 2.0;
            writeln!(
                out,
                r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="black"/>"#,
                zero - (mean + sd) * scale,
                zero - (mean - sd) * scale
            )
            .unwrap();
            writeln!(
                out,
                r#"<text x="{cx}" y="{}" font-size="9" text-anchor="middle">{}</text>"#,
                top + plot_h + 14.0,
                escape(name)
            )
            .unwrap();
            x += bar;
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            (start + x) / 2.0,
            top + plot_h + 34.0,
            escape(&group.label)
        )
        .unwrap();
        x += gap;
    }
    out.push_str("</svg>\n");
    out
}
