//! Plain SVG 1.1 output. Coordinates are written with two decimals so
//! identical input always yields identical bytes.

use std::fmt::Write;

use crate::skeleton::{Pose, SkeletonTopology};
use crate::trainer::LossRecord;

const CELL_W: f64 = 90.0;
const CELL_H: f64 = 140.0;
const MARGIN: f64 = 10.0;

/// Stick figures in a row, observed frames left of a divider and
/// predicted frames right of it. Orthographic x-y view with y up.
pub fn stick_figure_strip(prior: &[Pose], future: &[Pose], topology: &SkeletonTopology) -> String {
    let frames: Vec<&Pose> = prior.iter().chain(future).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &frames {
        for j in &p.joints {
            x0 = x0.min(j[0]);
            x1 = x1.max(j[0]);
            y0 = y0.min(j[1]);
            y1 = y1.max(j[1]);
        }
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (CELL_W - 2.0 * MARGIN).min(CELL_H - 2.0 * MARGIN) / span;
    let cx = (x0 + x1) / 2.0;
    let cy = (y0 + y1) / 2.0;

    let width = CELL_W * frames.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{CELL_H:.0}" viewBox="0 0 {width:.0} {CELL_H:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, pose) in frames.iter().enumerate() {
        let ox = CELL_W * i as f64 + CELL_W / 2.0;
        let oy = CELL_H / 2.0;
        let pt = |j: [f64; 3]| (ox + (j[0] - cx) * scale, oy - (j[1] - cy) * scale);
        let color = if i < prior.len() { "#333333" } else { "#c0392b" };
        let _ = writeln!(s, r#"<g stroke="{color}" fill="{color}" stroke-width="2">"#);
        for &(a, b) in topology.bones() {
            let (ax, ay) = pt(pose.joints[a]);
            let (bx, by) = pt(pose.joints[b]);
            let _ = writeln!(s, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}"/>"#);
        }
        for &j in &pose.joints {
            let (x, y) = pt(j);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    let dx = CELL_W * prior.len() as f64;
    let _ = writeln!(
        s,
        r##"<line class="divider" x1="{dx:.2}" y1="0" x2="{dx:.2}" y2="{CELL_H:.0}" stroke="#1f77b4" stroke-width="3"/>"##
    );
    s.push_str("</svg>\n");
    s
}

const CHART_W: f64 = 720.0;
const CHART_H: f64 = 420.0;
const PAD: f64 = 60.0;

/// Line chart of the three training losses against the step.
pub fn loss_chart(records: &[LossRecord]) -> Result<String, String> {
    if records.is_empty() {
        return Err("loss table has no rows".into());
    }
    let series: [(&str, &str, Vec<f64>); 3] = [
        ("critic", "#1f77b4", records.iter().map(|r| r.critic_loss).collect()),
        ("generator", "#ff7f0e", records.iter().map(|r| r.generator_loss).collect()),
        ("discriminator", "#2ca02c", records.iter().map(|r| r.discriminator_loss).collect()),
    ];
    let steps: Vec<f64> = records.iter().map(|r| r.step as f64).collect();
    let all = series.iter().flat_map(|s| s.2.iter().copied());
    if all.clone().any(|v| !v.is_finite()) {
        return Err("loss table contains non-finite values".into());
    }
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let (s0, s1) = (steps[0].min(steps[steps.len() - 1]), steps[0].max(steps[steps.len() - 1]));
    let s_span = (s1 - s0).max(1.0);
    let px = |x: f64| PAD + (x - s0) / s_span * (CHART_W - 2.0 * PAD);
    let py = |y: f64| CHART_H - PAD - (y - lo) / (hi - lo) * (CHART_H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CHART_W:.0}" height="{CHART_H:.0}" viewBox="0 0 {CHART_W:.0} {CHART_H:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (PAD, CHART_W - PAD, PAD, CHART_H - PAD);
    let _ = writeln!(
        s,
        r#"<path d="M{l:.2} {t:.2} L{l:.2} {b:.2} L{r:.2} {b:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<text x="{l:.2}" y="{:.2}" text-anchor="end">{hi:.4}</text>"#, t + 4.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{lo:.4}</text>"#, l - 4.0, b + 4.0);
    let _ = writeln!(s, r#"<text x="{l:.2}" y="{:.2}">{s0:.0}</text>"#, b + 18.0);
    let _ = writeln!(s, r#"<text x="{r:.2}" y="{:.2}" text-anchor="end">{s1:.0}</text>"#, b + 18.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#, CHART_W / 2.0, b + 36.0);
    for (i, (name, color, values)) in series.iter().enumerate() {
        let points: Vec<String> = steps
            .iter()
            .zip(values)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = PAD / 2.0;
        let lx = PAD + 160.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, lx + 26.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
