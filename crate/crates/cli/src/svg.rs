//! Minimal self-contained SVG renderings: diagrams, manifold traces and
//! region atlases.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use hetlock::cylinder::max_value;
use hetlock::diagram::{AtlasCell, Criticality, Diagram, Region};
use hetlock::stability::ManifoldTrace;
use hetlock::GOLDEN;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Data-to-pixel mapping of the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xticks: &[(f64, &str)], yticks: &[(f64, String)]) {
    let (l, r, t, b) = (f.px(f.x0), f.px(f.x1), f.py(f.y1), f.py(f.y0));
    let _ = writeln!(
        out,
        r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for (x, label) in xticks {
        let px = f.px(*x);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, b + 18.0);
    }
    for (y, label) in yticks {
        let py = f.py(*y);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, l - 8.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, (l + r) / 2.0, H - 10.0);
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{ylabel}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0
    );
}

/// Split a polyline in `(s, value)` where it jumps across the seam `s = 0 = 2 pi`.
fn split_at_seam(points: &[(f64, f64)], closed: bool) -> Vec<Vec<(f64, f64)>> {
    let mut pts = points.to_vec();
    if closed && pts.len() > 1 {
        pts.push(pts[0]);
    }
    let mut runs: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if let Some(&q) = cur.last() {
            if (p.0 - q.0).abs() > PI {
                runs.push(std::mem::take(&mut cur));
            }
        }
        cur.push(p);
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], style: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
}

fn s_ticks() -> Vec<(f64, &'static str)> {
    vec![(0.0, "0"), (PI / 2.0, "π/2"), (PI, "π"), (1.5 * PI, "3π/2"), (TAU, "2π")]
}

/// The diagram in the `(s, tau)` plane: `tau` vertical with 0 at the bottom.
///
/// Fold markers are circles, solid for supercritical folds and dashed for
/// subcritical ones.
pub fn diagram_svg(d: &Diagram) -> String {
    let f = Frame {
        x0: 0.0,
        x1: TAU,
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    header(&mut out);
    let yt: Vec<(f64, String)> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&y| (y, format!("{y}"))).collect();
    axes(&mut out, &f, "s", "τ", &s_ticks(), &yt);
    for (id, c) in d.curves.iter().enumerate() {
        let pts: Vec<(f64, f64)> = c.points.iter().map(|&(t, s)| (s, t)).collect();
        let _ = writeln!(out, r#"<g id="curve-{id}">"#);
        for run in split_at_seam(&pts, c.closed) {
            polyline(&mut out, &f, &run, r##"stroke="#1f4e9c" stroke-width="1.5""##);
        }
        let _ = writeln!(out, "</g>");
    }
    for fold in &d.folds {
        let dash = match fold.criticality {
            Criticality::Supercritical => "",
            Criticality::Subcritical => r#" stroke-dasharray="3,2""#,
            Criticality::Degenerate => r#" stroke-dasharray="1,2""#,
        };
        let _ = writeln!(
            out,
            r##"<circle class="fold {}" cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="#c0392b" stroke-width="1.5"{dash}/>"##,
            fold.criticality.as_str(),
            f.px(fold.s_star()),
            f.py(fold.tau)
        );
    }
    let p = d.params;
    let mut title = format!(
        "region {}: δ={}, γ={}, k={}",
        d.label.region.tag(),
        p.delta,
        p.gamma,
        p.shape
    );
    if d.curves.is_empty() {
        title.push_str(" (g has no zeros)");
    }
    let _ = writeln!(out, r#"<text x="{LEFT}" y="20">{title}</text>"#);
    out.push_str("</svg>\n");
    out
}

/// Manifold traces in the `(s, y)` plane; stable halves dashed.
pub fn manifolds_svg(traces: &[ManifoldTrace], tau: f64) -> String {
    let f = Frame {
        x0: 0.0,
        x1: TAU,
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    header(&mut out);
    let yt: Vec<(f64, String)> = [0.0, 0.5, 1.0].iter().map(|&y| (y, format!("{y}"))).collect();
    axes(&mut out, &f, "s", "y", &s_ticks(), &yt);
    for t in traces {
        let pts: Vec<(f64, f64)> = t.points.iter().map(|&(y, s)| (s, y)).collect();
        let style = if t.branch.is_stable() {
            r##"stroke="#1f4e9c" stroke-dasharray="4,2""##
        } else {
            r##"stroke="#c0392b""##
        };
        let _ = writeln!(out, r#"<g class="{}">"#, t.branch.as_str());
        for run in split_at_seam(&pts, false) {
            polyline(&mut out, &f, &run, style);
        }
        let _ = writeln!(out, "</g>");
    }
    if let Some(t) = traces.first() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            f.px(t.saddle.s),
            f.py(t.saddle.tau)
        );
    }
    let _ = writeln!(out, r#"<text x="{LEFT}" y="20">manifolds of G_τ, τ={tau}</text>"#);
    out.push_str("</svg>\n");
    out
}

fn region_color(r: Region) -> &'static str {
    match r {
        Region::A | Region::UnitA => "#a6cee3",
        Region::B | Region::UnitB => "#b2df8a",
        Region::C | Region::UnitC => "#fdbf6f",
        Region::W | Region::NoZeros => "#eeeeee",
        Region::X => "#cab2d6",
        Region::Y | Region::TwoCircles => "#fb9a99",
        Region::Z | Region::OneCircle => "#ffff99",
        _ => "#666666",
    }
}

/// Region atlas in the `(delta, gamma)` plane with `gamma_+`, `gamma_-` and
/// the `delta = golden` wall overlaid.
pub fn atlas_svg(cells: &[AtlasCell], shape: f64, deltas: &[f64], gammas: &[f64]) -> String {
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let (dlo, dhi) = span(deltas);
    let (glo, ghi) = span(gammas);
    let (dw, gw) = (
        (dhi - dlo) / (deltas.len().max(2) - 1) as f64,
        (ghi - glo) / (gammas.len().max(2) - 1) as f64,
    );
    let f = Frame {
        x0: dlo - dw / 2.0,
        x1: dhi + dw / 2.0,
        y0: glo - gw / 2.0,
        y1: ghi + gw / 2.0,
    };
    let mut out = String::new();
    header(&mut out);
    for c in cells {
        let (x0, x1) = (f.px(c.delta - dw / 2.0), f.px(c.delta + dw / 2.0));
        let (y0, y1) = (f.py(c.gamma + gw / 2.0), f.py(c.gamma - gw / 2.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
            x1 - x0,
            y1 - y0,
            region_color(c.region),
            c.region.tag()
        );
    }
    let xt: Vec<(f64, String)> = (0..5).map(|i| dlo + (dhi - dlo) * i as f64 / 4.0).map(|d| (d, format!("{d:.2}"))).collect();
    let yt: Vec<(f64, String)> = (0..5).map(|i| glo + (ghi - glo) * i as f64 / 4.0).map(|g| (g, format!("{g:.2}"))).collect();
    let xt_ref: Vec<(f64, &str)> = xt.iter().map(|(d, s)| (*d, s.as_str())).collect();
    axes(&mut out, &f, "δ", "γ", &xt_ref, &yt);

    let upper = dhi.min(GOLDEN - 1e-6);
    if dlo < upper {
        let ds: Vec<f64> = (0..=200).map(|i| dlo + (upper - dlo) * i as f64 / 200.0).collect();
        let curve = |div: f64| -> Vec<(f64, f64)> {
            ds.iter()
                .filter_map(|&d| max_value(d).ok().map(|m| (d, m / div)))
                .filter(|&(_, g)| g >= f.y0 && g <= f.y1)
                .collect()
        };
        let _ = writeln!(out, r#"<g class="gamma-plus">"#);
        polyline(&mut out, &f, &curve(1.0 + shape), r#"stroke="black" stroke-width="1.5""#);
        let _ = writeln!(out, "</g>");
        if shape < 1.0 {
            let _ = writeln!(out, r#"<g class="gamma-minus">"#);
            polyline(&mut out, &f, &curve(1.0 - shape), r#"stroke="black" stroke-width="1.5" stroke-dasharray="5,3""#);
            let _ = writeln!(out, "</g>");
        }
    }
    if GOLDEN > f.x0 && GOLDEN < f.x1 {
        let x = f.px(GOLDEN);
        let _ = writeln!(
            out,
            r#"<line class="golden" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-dasharray="2,2"/>"#,
            f.py(f.y0),
            f.py(f.y1)
        );
    }
    let mut present: Vec<Region> = Vec::new();
    for c in cells {
        if !present.contains(&c.region) {
            present.push(c.region);
        }
    }
    for (i, r) in present.iter().enumerate() {
        let x = LEFT + 90.0 * i as f64;
        let _ = writeln!(out, r#"<rect x="{x}" y="8" width="12" height="12" fill="{}" stroke="black"/>"#, region_color(*r));
        let _ = writeln!(out, r#"<text x="{}" y="19">{}</text>"#, x + 16.0, r.tag());
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
