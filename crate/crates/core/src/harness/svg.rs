//! Dependency-free SVG output for SoC curves and threshold-sweep heatmaps.
//! Coordinates are printed with fixed precision so output is byte-stable.

use std::fmt::Write as _;

use super::SweepReport;
use crate::error::{Error, Result};
use crate::simulate::SimTrace;

const PALETTE: [&str; 6] = [
    "#d62728", "#ff7f0e", "#2ca02c", "#1f77b4", "#9467bd", "#8c564b",
];
/// Polylines are decimated to roughly this many min/max buckets.
const MAX_BUCKETS: usize = 1000;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// (time, soc) samples of a trace, decimated by keeping each bucket's
/// minimum and maximum in time order.
fn soc_series(trace: &SimTrace) -> Vec<(f64, f64)> {
    let t0 = trace.steps.first().map_or(0.0, |s| s.t_s);
    let mut pts = vec![(t0, trace.soc_init)];
    pts.extend(
        trace
            .steps
            .iter()
            .map(|s| (s.t_s + trace.dt_s, s.soc_after)),
    );
    if pts.len() <= 2 * MAX_BUCKETS {
        return pts;
    }
    let size = pts.len().div_ceil(MAX_BUCKETS);
    let mut out = Vec::with_capacity(2 * MAX_BUCKETS + 1);
    for chunk in pts.chunks(size) {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in chunk.iter().enumerate() {
            if p.1 < chunk[lo].1 {
                lo = i;
            }
            if p.1 > chunk[hi].1 {
                hi = i;
            }
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push(chunk[a]);
        if b != a {
            out.push(chunk[b]);
        }
    }
    if let Some(last) = pts.last() {
        if out.last() != Some(last) {
            out.push(*last);
        }
    }
    out
}

/// SoC (%) over time (h), one polyline per labelled trace, with a dashed
/// line at `soc_floor`.
pub fn render_soc_plot(traces: &[(String, &SimTrace)], soc_floor: f64) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::invalid("SoC plot needs at least one trace"));
    }
    if traces.iter().any(|(_, t)| t.steps.is_empty()) {
        return Err(Error::invalid("SoC plot got an empty trace"));
    }
    let (w, h) = (900.0, 480.0);
    let (left, right, top, bottom) = (64.0, 190.0, 36.0, 52.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let t_end_h = traces
        .iter()
        .filter_map(|(_, t)| t.steps.last().map(|s| (s.t_s + t.dt_s) / 3600.0))
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let x = |t_h: f64| left + pw * t_h / t_end_h;
    let y = |soc: f64| top + ph * (1.0 - soc);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##
    );

    for pct in (0..=100).step_by(20) {
        let yy = y(pct as f64 / 100.0);
        let _ = writeln!(
            s,
            r##"<line x1="{left:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{pct}</text>"##,
            left + pw,
            left - 6.0,
            yy + 4.0
        );
    }
    let tick_h = [0.25, 0.5, 1.0, 2.0, 4.0]
        .into_iter()
        .find(|step| t_end_h / step <= 12.0)
        .unwrap_or(8.0);
    let mut tick = 0.0;
    while tick <= t_end_h + 1e-9 {
        let xx = x(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="#444"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 19.0,
            tick
        );
        tick += tick_h;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (h)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">SoC (%)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    let yf = y(soc_floor);
    let _ = writeln!(
        s,
        r##"<line class="floor" x1="{left:.2}" y1="{yf:.2}" x2="{:.2}" y2="{yf:.2}" stroke="#000" stroke-dasharray="6 4"/>"##,
        left + pw
    );

    for (k, (label, trace)) in traces.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (i, (t, soc)) in soc_series(trace).into_iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", x(t / 3600.0), y(soc));
        }
        let _ = writeln!(
            s,
            r#"<polyline class="soc" fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>"#
        );
        let ly = top + 14.0 + 20.0 * k as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Linear blend over a short perceptual ramp (dark blue to yellow).
fn ramp_color(x: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [
        (68.0, 1.0, 84.0),
        (49.0, 104.0, 142.0),
        (53.0, 183.0, 121.0),
        (253.0, 231.0, 37.0),
    ];
    let x = x.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// Lower threshold on x, upper threshold on y. Feasible cells are coloured
/// by extra fuel, infeasible cells hatched, the best cell outlined.
pub fn render_sweep_heatmap(report: &SweepReport) -> Result<String> {
    if report.grid.is_empty() {
        return Err(Error::invalid("heatmap needs a non-empty sweep grid"));
    }
    let key = |v: f64| (v * 1e6).round() as i64;
    let mut lowers: Vec<i64> = report.grid.iter().map(|c| key(c.lower)).collect();
    let mut uppers: Vec<i64> = report.grid.iter().map(|c| key(c.upper)).collect();
    lowers.sort_unstable();
    lowers.dedup();
    uppers.sort_unstable();
    uppers.dedup();

    let cell = 30.0;
    let (left, top) = (70.0, 40.0);
    let pw = cell * lowers.len() as f64;
    let ph = cell * uppers.len() as f64;
    let w = left + pw + 150.0;
    let h = top + ph + 60.0;

    let feasible: Vec<f64> = report
        .grid
        .iter()
        .filter(|c| c.feasible)
        .map(|c| c.extra_fuel_l)
        .collect();
    let lo = feasible.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = feasible.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">
<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="6" height="6" fill="#eee"/><line x1="0" y1="0" x2="0" y2="6" stroke="#999" stroke-width="2"/></pattern></defs>
<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>
<text x="{left:.2}" y="22" font-size="14">{} extra fuel (L) by bang-bang thresholds</text>"##,
        escape(&report.cycle)
    );

    let col = |v: f64| lowers.binary_search(&key(v)).unwrap_or(0);
    let row = |v: f64| uppers.len() - 1 - uppers.binary_search(&key(v)).unwrap_or(0);
    for c in &report.grid {
        let cx = left + cell * col(c.lower) as f64;
        let cy = top + cell * row(c.upper) as f64;
        if c.feasible {
            let norm = if hi > lo {
                (c.extra_fuel_l - lo) / (hi - lo)
            } else {
                0.0
            };
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{cx:.2}" y="{cy:.2}" width="{cell}" height="{cell}" fill="{}" stroke="#fff"><title>{:.0}/{:.0}: {} L</title></rect>"##,
                ramp_color(norm),
                c.lower * 100.0,
                c.upper * 100.0,
                super::fmt_sig6(c.extra_fuel_l)
            );
        } else {
            let _ = writeln!(
                s,
                r##"<rect class="cell infeasible" x="{cx:.2}" y="{cy:.2}" width="{cell}" height="{cell}" fill="url(#hatch)" stroke="#fff"><title>{:.0}/{:.0}: infeasible</title></rect>"##,
                c.lower * 100.0,
                c.upper * 100.0
            );
        }
    }
    if let Some(best) = report.best {
        let cx = left + cell * col(best.lower) as f64;
        let cy = top + cell * row(best.upper) as f64;
        let _ = writeln!(
            s,
            r##"<rect class="best" x="{cx:.2}" y="{cy:.2}" width="{cell}" height="{cell}" fill="none" stroke="#e00" stroke-width="3"/>"##
        );
    }
    for (i, &l) in lowers.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + cell * (i as f64 + 0.5),
            top + ph + 16.0,
            (l as f64 / 1e4).round()
        );
    }
    for (j, &u) in uppers.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * ((uppers.len() - 1 - j) as f64 + 0.5) + 4.0,
            (u as f64 / 1e4).round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">lower SoC threshold (%)</text>"#,
        left + pw / 2.0,
        top + ph + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">upper SoC threshold (%)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    let lx = left + pw + 20.0;
    for k in 0..=10 {
        let f = k as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            top + ph * (1.0 - f) - ph / 11.0,
            ph / 11.0,
            ramp_color(f)
        );
    }
    if hi.is_finite() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{} L</text><text x="{:.2}" y="{:.2}">{} L</text>"#,
            lx + 22.0,
            top + 10.0,
            super::fmt_sig6(hi),
            lx + 22.0,
            top + ph,
            super::fmt_sig6(lo)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
