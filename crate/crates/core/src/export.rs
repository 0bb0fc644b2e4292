//! CSV and SVG writers. Output depends only on the data passed in, so equal
//! inputs give byte-identical files.

use std::fmt::Write;

use num_complex::Complex64;

use crate::region::RegionSample;
use crate::sim::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 56.0;

/// Full-precision number for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `re,im,inside` per grid point, row by row in increasing `Im`.
pub fn region_csv(sample: &RegionSample) -> String {
    let mut out = String::from("re,im,inside\n");
    for (z, inside) in sample.points() {
        let _ = writeln!(out, "{},{},{}", num(z.re), num(z.im), u8::from(inside));
    }
    out
}

/// Points drawn as crosses on top of a region plot.
#[derive(Clone, Debug)]
pub struct Overlay<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [Complex64],
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - PAD - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * PAD)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn frame_box(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * PAD,
        HEIGHT - 2.0 * PAD
    );
    let bottom = HEIGHT - PAD + 16.0;
    let _ = writeln!(out, r#"<text x="{PAD}" y="{bottom}" text-anchor="middle">{}</text>"#, tick(f.x0));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{bottom}" text-anchor="middle">{}</text>"#,
        WIDTH - PAD,
        tick(f.x1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        PAD - 4.0,
        HEIGHT - PAD,
        tick(f.y0)
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, tick(f.y1));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Region plot: inside cells filled blue, axes through the origin when
/// visible, and each overlay drawn as crosses with a legend entry.
pub fn region_svg(sample: &RegionSample, title: &str, overlays: &[Overlay<'_>]) -> String {
    let b = sample.bounds;
    let f = Frame {
        x0: b.re_min,
        x1: b.re_max,
        y0: b.im_min,
        y1: b.im_max,
    };
    let mut out = String::new();
    header(&mut out, title);

    let dx = (b.re_max - b.re_min) / (sample.re_steps - 1) as f64;
    let dy = (b.im_max - b.im_min) / (sample.im_steps - 1) as f64;
    let _ = writeln!(out, r##"<g fill="#4a7bd0" stroke="none">"##);
    for j in 0..sample.im_steps {
        let mut i = 0;
        while i < sample.re_steps {
            if !sample.is_inside(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < sample.re_steps && sample.is_inside(i, j) {
                i += 1;
            }
            let lo = (sample.re_at(start) - dx / 2.0).max(b.re_min);
            let hi = (sample.re_at(i - 1) + dx / 2.0).min(b.re_max);
            let top = (sample.im_at(j) + dy / 2.0).min(b.im_max);
            let bot = (sample.im_at(j) - dy / 2.0).max(b.im_min);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                f.x(lo),
                f.y(top),
                f.x(hi) - f.x(lo),
                f.y(bot) - f.y(top)
            );
        }
    }
    let _ = writeln!(out, "</g>");

    if b.re_min <= 0.0 && 0.0 <= b.re_max {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{PAD}" x2="{0:.2}" y2="{1}" stroke="gray" stroke-dasharray="4 3"/>"#,
            f.x(0.0),
            HEIGHT - PAD
        );
    }
    if b.im_min <= 0.0 && 0.0 <= b.im_max {
        let _ = writeln!(
            out,
            r#"<line x1="{PAD}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            f.y(0.0),
            WIDTH - PAD
        );
    }

    for (n, o) in overlays.iter().enumerate() {
        let _ = writeln!(out, r#"<g stroke="{}" stroke-width="2">"#, escape(o.color));
        for z in o.points.iter().filter(|z| b.contains(**z)) {
            let (x, y) = (f.x(z.re), f.y(z.im));
            let _ = writeln!(
                out,
                r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            );
        }
        let ly = PAD + 16.0 + 18.0 * n as f64;
        let lx = WIDTH - PAD - 120.0;
        let _ = writeln!(out, r#"<path d="M{} {}L{} {}M{} {}L{} {}"/>"#, lx - 4.0, ly - 8.0, lx + 4.0, ly, lx - 4.0, ly, lx + 4.0, ly - 8.0);
        let _ = writeln!(out, "</g>");
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 10.0, escape(o.label));
    }

    frame_box(&mut out, &f, "Re λ", "Im λ");
    out.push_str("</svg>\n");
    out
}

/// One row per recorded sample: `time`, then `x_i`, `xhat_i`, `err_i`, `u_i`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.states.first().map_or(0, |v| v.len());
    let inputs = traj.inputs.first().map_or(0, |v| v.len());
    let mut out = String::from("time");
    for (prefix, count) in [("x", dim), ("xhat", dim), ("err", dim), ("u", inputs)] {
        for i in 0..count {
            let _ = write!(out, ",{prefix}_{i}");
        }
    }
    out.push('\n');
    for k in 0..traj.len() {
        out.push_str(&num(traj.times[k]));
        for v in [&traj.states[k], &traj.estimates[k], &traj.errors[k], &traj.inputs[k]] {
            for x in v.iter() {
                out.push(',');
                out.push_str(&num(*x));
            }
        }
        out.push('\n');
    }
    out
}

/// `log10 ‖x(t)‖` and `log10 ‖x̃(t)‖` against time. Zero norms are drawn at
/// the bottom of the plot.
pub fn norms_svg(traj: &Trajectory, title: &str) -> String {
    let series = [
        ("‖x‖", "#c03030", traj.state_norms()),
        ("‖x̃‖", "#3050c0", traj.error_norms()),
    ];
    let logs: Vec<Vec<Option<f64>>> = series
        .iter()
        .map(|(_, _, v)| {
            v.iter()
                .map(|&n| (n > 0.0 && n.is_finite()).then(|| n.log10()))
                .collect()
        })
        .collect();
    let finite = logs.iter().flatten().flatten().copied();
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let t0 = traj.times.first().copied().unwrap_or(0.0);
    let mut t1 = traj.times.last().copied().unwrap_or(1.0);
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    let f = Frame {
        x0: t0,
        x1: t1,
        y0: lo.floor(),
        y1: hi.ceil(),
    };

    let mut out = String::new();
    let title = if traj.diverged { format!("{title} (diverged)") } else { title.to_string() };
    header(&mut out, &title);
    for (n, ((label, color, _), log)) in series.iter().zip(&logs).enumerate() {
        let mut d = String::new();
        for (k, v) in log.iter().enumerate() {
            let y = v.unwrap_or(f.y0);
            let _ = write!(d, "{}{:.2} {:.2}", if k == 0 { "M" } else { "L" }, f.x(traj.times[k]), f.y(y));
        }
        if !d.is_empty() {
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1"/>"#);
        }
        let ly = PAD + 16.0 + 18.0 * n as f64;
        let lx = WIDTH - PAD - 100.0;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{ly}">{label}</text>"#,
            lx - 20.0,
            ly - 4.0,
            lx - 4.0,
            ly - 4.0,
            lx + 4.0
        );
    }
    frame_box(&mut out, &f, "t", "log10 norm");
    out.push_str("</svg>\n");
    out
}
