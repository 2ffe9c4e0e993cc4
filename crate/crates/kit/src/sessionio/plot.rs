//! Standalone SVG of a session's angle traces with repetition boundaries.

use std::fmt::Write as _;

use shoulder_core::params::{SessionAnalysis, TaskAnalysis};
use shoulder_core::Trace;

const WIDTH: f64 = 900.0;
const PANEL: f64 = 260.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;

struct Frame {
    x0: f64,
    x1: f64,
    y_max: f64,
    top: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        self.top + PANEL - BOTTOM - v / self.y_max * (PANEL - TOP - BOTTOM)
    }
}

fn polyline(out: &mut String, f: &Frame, trace: &Trace, colour: &str) {
    let _ = write!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points=""#);
    for (i, (t, v)) in trace.t.iter().zip(&trace.v).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", f.x(*t), f.y(v.max(0.0)));
    }
    out.push_str("\"/>\n");
}

fn vline(out: &mut String, f: &Frame, t: f64, colour: &str, dash: &str) {
    let (x, y0, y1) = (f.x(t), f.y(0.0), f.y(f.y_max));
    let _ = writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="{colour}" stroke-width="0.8" stroke-dasharray="{dash}"/>"#
    );
}

fn panel(out: &mut String, task: &TaskAnalysis, top: f64) {
    let t = &task.primary.t;
    let (x0, x1) = (t[0], t[t.len() - 1].max(t[0] + 1e-9));
    let peak = task.primary.v.iter().cloned().fold(0.0, f64::max);
    let y_max = ((peak / 30.0).ceil() * 30.0).max(30.0);
    let f = Frame { x0, x1, y_max, top };

    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="{:.2}" font-size="14" font-family="sans-serif">{:?}: elevation (black), scapular upward rotation (blue)</text>"#,
        top + 20.0,
        task.kind
    );
    let mut tick = 0.0;
    while tick <= y_max + 1e-9 {
        let y = f.y(tick);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd" stroke-width="0.5"/><text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="end">{tick}</text>"##,
            WIDTH - RIGHT,
            LEFT - 5.0,
            y + 3.0
        );
        tick += 30.0;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="sans-serif" text-anchor="middle">t (s), {:.1} to {:.1}</text>"#,
        WIDTH / 2.0,
        top + PANEL - 10.0,
        x0,
        x1
    );

    for r in &task.repetitions {
        let colour = if r.valid { "#888" } else { "#d33" };
        vline(out, &f, r.t_start, colour, "4 3");
        vline(out, &f, r.t_end, colour, "4 3");
        vline(out, &f, r.t_peak, "#bbb", "1 3");
    }
    for d in &task.details {
        if let Some(on) = d.humerus_onset {
            vline(out, &f, on.t_onset, "#2a2", "2 2");
        }
        if let Some(on) = d.scapula_onset {
            vline(out, &f, on.t_onset, "#25c", "2 2");
        }
    }
    polyline(out, &f, &task.primary, "#000");
    if let Some(s) = &task.scapula {
        polyline(out, &f, s, "#25c");
    }
}

/// One panel per task.
pub fn render_svg(analysis: &SessionAnalysis, title: &str) -> String {
    let height = TOP + PANEL * analysis.tasks.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="24" font-size="16" font-family="sans-serif">{}</text>"#,
        escape(title)
    );
    for (i, task) in analysis.tasks.iter().enumerate() {
        panel(&mut out, task, TOP + i as f64 * PANEL);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
