//! Deterministic SVG rendering of a CD diagram.

use std::fmt::Write as _;
use std::path::Path;

use super::CDDiagram;
use crate::error::{ImprintError, Result};

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 140.0;
const AXIS_Y: f64 = 60.0;
const ROW: f64 = 22.0;
const BAR_GAP: f64 = 9.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the diagram: a rank axis with 1 on the left, one labelled marker
/// per config, and one thick bar per clique of two or more configs.
pub fn render_svg(diagram: &CDDiagram) -> String {
    let k = diagram.avg_ranks.len().max(2);
    let span = WIDTH - 2.0 * MARGIN;
    let x_of = |rank: f64| MARGIN + (rank - 1.0) / (k as f64 - 1.0) * span;

    let order = diagram.rank_order();
    let left = order.len().div_ceil(2);
    let bars: Vec<&Vec<usize>> = diagram.cliques.iter().filter(|c| c.len() >= 2).collect();
    let bars_bottom = AXIS_Y + 16.0 + bars.len() as f64 * BAR_GAP;
    let label_top = bars_bottom + 14.0;
    let height = label_top + left.max(order.len() - left) as f64 * ROW + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{:.2}" y1="{AXIS_Y:.2}" x2="{:.2}" y2="{AXIS_Y:.2}" stroke="black" stroke-width="1"/>"#,
        x_of(1.0),
        x_of(k as f64)
    );
    for r in 1..=k {
        let x = x_of(r as f64);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{AXIS_Y:.2}" stroke="black" stroke-width="1"/>"#,
            AXIS_Y - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle">{r}</text>"#,
            AXIS_Y - 10.0
        );
    }

    for (i, clique) in bars.iter().enumerate() {
        let lo = clique
            .iter()
            .map(|&c| diagram.avg_ranks[c])
            .fold(f64::INFINITY, f64::min);
        let hi = clique
            .iter()
            .map(|&c| diagram.avg_ranks[c])
            .fold(f64::NEG_INFINITY, f64::max);
        let y = AXIS_Y + 16.0 + i as f64 * BAR_GAP;
        let _ = writeln!(
            s,
            r#"<line class="clique" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="4" stroke-linecap="round"/>"#,
            x_of(lo) - 4.0,
            x_of(hi) + 4.0
        );
    }

    for (pos, &c) in order.iter().enumerate() {
        let x = x_of(diagram.avg_ranks[c]);
        let on_left = pos < left;
        let row = if on_left { pos } else { order.len() - 1 - pos };
        let y = label_top + row as f64 * ROW;
        let (end_x, anchor, text_x) = if on_left {
            (MARGIN - 10.0, "end", MARGIN - 14.0)
        } else {
            (WIDTH - MARGIN + 10.0, "start", WIDTH - MARGIN + 14.0)
        };
        let _ = writeln!(
            s,
            r#"<polyline class="leader" points="{x:.2},{AXIS_Y:.2} {x:.2},{y:.2} {end_x:.2},{y:.2}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text class="config" x="{text_x:.2}" y="{:.2}" text-anchor="{anchor}">{} ({:.2})</text>"#,
            y + 4.0,
            escape(&diagram.config_names[c]),
            diagram.avg_ranks[c]
        );
    }
    if diagram.friedman_not_rejected {
        let _ = writeln!(
            s,
            r#"<text class="warning" x="{:.2}" y="16.00" text-anchor="middle">Friedman test did not reject at alpha = {}</text>"#,
            WIDTH / 2.0,
            diagram.alpha
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_cd_svg(diagram: &CDDiagram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(diagram)).map_err(|e| ImprintError::io(path, e))
}
