//! SVG export of a trace: top-down XY paths plus an altitude-over-time strip.

use sib_core::sim::{Color, Trace};
use std::fmt::Write;

const MAP: f64 = 480.0;
const STRIP: f64 = 240.0;
const PAD: f64 = 30.0;

/// Distinct per-drone color.
fn drone_color(k: usize, n: usize) -> String {
    let c = Color::from_hue(360.0 * k as f64 / n.max(1) as f64);
    format!("#{:02x}{:02x}{:02x}", c.r, c.g, c.b)
}

struct Bounds {
    lo: f64,
    hi: f64,
}

impl Bounds {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo.is_finite() && hi - lo > 1e-9 {
            Bounds { lo, hi }
        } else {
            let mid = if lo.is_finite() { lo } else { 0.0 };
            Bounds {
                lo: mid - 1.0,
                hi: mid + 1.0,
            }
        }
    }

    fn map(&self, v: f64, size: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo) * size
    }
}

pub fn trace_svg(trace: &Trace) -> String {
    let width = PAD * 3.0 + MAP + STRIP;
    let height = PAD * 2.0 + MAP;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{MAP}" height="{MAP}" fill="none" stroke="#999"/>"##
    );
    let strip_x = PAD * 2.0 + MAP;
    let _ = writeln!(
        s,
        r##"<rect x="{strip_x}" y="{PAD}" width="{STRIP}" height="{MAP}" fill="none" stroke="#999"/>"##
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-size="12">top view (x right, y up)</text>"#);
    let _ = writeln!(s, r#"<text x="{strip_x}" y="20" font-size="12">altitude over time</text>"#);

    let Some(first) = trace.entries.first() else {
        s.push_str("</svg>\n");
        return s;
    };
    let n = first.drones.len();
    let all = || trace.entries.iter().flat_map(|e| e.drones.iter().map(|d| d.position()));
    // equal scale on both axes so shapes are not distorted
    let bx = Bounds::of(all().map(|p| p.x));
    let by = Bounds::of(all().map(|p| p.y));
    let half = ((bx.hi - bx.lo).max(by.hi - by.lo)) / 2.0 * 1.1;
    let (cx, cy) = ((bx.hi + bx.lo) / 2.0, (by.hi + by.lo) / 2.0);
    let sx = Bounds { lo: cx - half, hi: cx + half };
    let sy = Bounds { lo: cy - half, hi: cy + half };
    let bz = Bounds::of(all().map(|p| p.z).chain([0.0]));
    let bt = Bounds::of(trace.entries.iter().map(|e| e.sim_time));

    for k in 0..n {
        let color = drone_color(k, n);
        let pts: Vec<(f64, f64)> = trace
            .entries
            .iter()
            .map(|e| {
                let p = e.drones[k].position();
                (PAD + sx.map(p.x, MAP), PAD + MAP - sy.map(p.y, MAP))
            })
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        let (x0, y0) = pts[0];
        let (x1, y1) = pts[pts.len() - 1];
        let _ = writeln!(s, r#"<circle cx="{x0:.2}" cy="{y0:.2}" r="4" fill="{color}"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="none" stroke="{color}" stroke-width="2"/>"#,
            x1 - 4.0,
            y1 - 4.0
        );
        let alt: Vec<String> = trace
            .entries
            .iter()
            .map(|e| {
                let x = strip_x + bt.map(e.sim_time, STRIP);
                let y = PAD + MAP - bz.map(e.drones[k].position().z, MAP);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
            alt.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
