//! Export formats: CSV trajectory tables, the crossing-event table, and a
//! deterministic SVG phase portrait. All writers format numbers through
//! the standard shortest-round-trip display, so identical runs produce
//! byte-identical files.

use triflow::domain::FundamentalDomain;
use triflow::flow::{StopReason, Trajectory};

/// Trajectory table for upper-half-space runs: one row per accepted
/// sample, tagged with its segment index and accumulated face word.
pub fn csv_hpoint(traj: &Trajectory, domain: &FundamentalDomain) -> String {
    let mut out = String::from("t,x,y,r,segment,word\n");
    for (i, seg) in traj.segments.iter().enumerate() {
        let word = domain.word_label(&seg.word);
        for &(t, x) in &seg.samples {
            out.push_str(&format!("{t},{},{},{},{i},{word}\n", x[0], x[1], x[2]));
        }
    }
    out
}

/// Trajectory table for four-coordinate Euclidean runs. The event column
/// carries the crossing side on the last row of each crossed segment, and
/// tags an absorbing exit or sliding arrest on the final row.
pub fn csv_state4(traj: &Trajectory) -> String {
    let mut out = String::from("t,x1,x2,x3,x4,segment,event\n");
    let last_seg = traj.segments.len() - 1;
    for (i, seg) in traj.segments.iter().enumerate() {
        let last_row = seg.samples.len().saturating_sub(1);
        for (row, &(t, x)) in seg.samples.iter().enumerate() {
            let event = if row != last_row {
                String::new()
            } else if i < last_seg {
                traj.events[i].side_label.clone()
            } else {
                match &traj.stop {
                    StopReason::LeftDomain { side, .. } => format!("left:{side}"),
                    StopReason::SlidingSeam { side, .. } => format!("arrest:{side}"),
                    _ => String::new(),
                }
            };
            out.push_str(&format!(
                "{t},{},{},{},{},{i},{event}\n",
                x[0], x[1], x[2], x[3]
            ));
        }
    }
    out
}

/// The crossing log as its own table.
pub fn events_table(traj: &Trajectory) -> String {
    let mut out = format!("crossings: {}\n", traj.events.len());
    for (i, e) in traj.events.iter().enumerate() {
        out.push_str(&format!(
            "  {:>3}  t = {:<22}  side {:<12}  exit ({:.6}, {:.6}, {:.6}, {:.6})  re-entry ({:.6}, {:.6}, {:.6}, {:.6})\n",
            i,
            format!("{}", e.t),
            format!("{:?}", e.side_label),
            e.incoming[0], e.incoming[1], e.incoming[2], e.incoming[3],
            e.outgoing[0], e.outgoing[1], e.outgoing[2], e.outgoing[3],
        ));
    }
    out
}

pub fn stop_text(stop: &StopReason) -> String {
    match stop {
        StopReason::Completed => "completed: reached t_end".to_string(),
        StopReason::Equilibrium { t, speed } => {
            format!("equilibrium at t = {t} (speed {speed:e})")
        }
        StopReason::PoleHit { t, message } => format!("pole at t = {t}: {message}"),
        StopReason::BudgetExceeded { t, steps } => {
            format!("step budget exhausted at t = {t} after {steps} steps")
        }
        StopReason::LeftDomain { t, side } => {
            format!("left the domain at t = {t} through unpaired side {side:?}")
        }
        StopReason::SlidingSeam { t, side, outward_rate } => {
            format!("sliding arrest on side {side:?} at t = {t} (outward rate {outward_rate:e})")
        }
    }
}

/// Whether the stop reason counts as a computation failure for the exit
/// code: poles and exhausted budgets do, geometric endings do not.
pub fn stop_is_failure(stop: &StopReason) -> bool {
    matches!(stop, StopReason::PoleHit { .. } | StopReason::BudgetExceeded { .. })
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Viewport {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Viewport {
    fn fit(min: [f64; 2], max: [f64; 2]) -> Viewport {
        let pad = |lo: f64, hi: f64| if hi - lo < 1e-12 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        let (x0, x1) = pad(min[0], max[0]);
        let (y0, y1) = pad(min[1], max[1]);
        Viewport {
            x0,
            y0,
            sx: (SVG_W - 2.0 * MARGIN) / (x1 - x0),
            sy: (SVG_H - 2.0 * MARGIN) / (y1 - y0),
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let x = MARGIN + (p[0] - self.x0) * self.sx;
        let y = SVG_H - MARGIN - (p[1] - self.y0) * self.sy;
        (x, y)
    }
}

/// Renders trajectories as a two-dimensional phase portrait: one polyline
/// per segment, the domain boundary as a dashed outline, and each wrap
/// discontinuity marked by a filled dot at the exit point and a hollow dot
/// at the re-entry point. The output is plain SVG 1.1 and depends only on
/// the inputs, so identical runs serialize identically.
pub fn render_portrait(
    trajectories: &[&Trajectory],
    proj: (usize, usize),
    axes: (&str, &str),
    outline: &[[f64; 4]],
) -> Result<String, String> {
    let project = |x: &[f64; 4]| [x[proj.0], x[proj.1]];
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2]| {
        for a in 0..2 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    };
    let mut samples = 0usize;
    for traj in trajectories {
        for seg in &traj.segments {
            for (_, x) in &seg.samples {
                grow(project(x));
                samples += 1;
            }
        }
    }
    if samples == 0 {
        return Err("render_portrait needs at least one sampled trajectory".to_string());
    }
    for rect in outline {
        grow([rect[0], rect[2]]);
        grow([rect[1], rect[3]]);
    }

    let vp = Viewport::fit(min, max);
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"#ffffff\"/>\n"
    ));

    for rect in outline {
        let (ax, ay) = vp.map([rect[0], rect[3]]);
        let (bx, by) = vp.map([rect[1], rect[2]]);
        svg.push_str(&format!(
            "<rect x=\"{ax:.3}\" y=\"{ay:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n",
            bx - ax,
            by - ay
        ));
    }

    for (ti, traj) in trajectories.iter().enumerate() {
        let color = PALETTE[ti % PALETTE.len()];
        for seg in &traj.segments {
            if seg.samples.len() == 1 {
                let (x, y) = vp.map(project(&seg.samples[0].1));
                svg.push_str(&format!(
                    "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"1.5\" fill=\"{color}\"/>\n"
                ));
                continue;
            }
            let mut d = String::new();
            for (row, (_, x)) in seg.samples.iter().enumerate() {
                let (px, py) = vp.map(project(x));
                let op = if row == 0 { 'M' } else { 'L' };
                d.push_str(&format!("{op}{px:.3} {py:.3}"));
            }
            svg.push_str(&format!(
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n"
            ));
        }
        for e in &traj.events {
            let (xi, yi) = vp.map(project(&e.incoming));
            let (xo, yo) = vp.map(project(&e.outgoing));
            svg.push_str(&format!(
                "<circle cx=\"{xi:.3}\" cy=\"{yi:.3}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
            svg.push_str(&format!(
                "<circle cx=\"{xo:.3}\" cy=\"{yo:.3}\" r=\"3\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n"
            ));
        }
    }

    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        SVG_W / 2.0 - 10.0,
        SVG_H - MARGIN / 3.0,
        axes.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        MARGIN / 3.0,
        SVG_H / 2.0,
        axes.1
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Parses a projection choice: axis names concatenated or comma-separated,
/// e.g. "xy", "xr", "x1x3", "x1,x3".
pub fn parse_projection(choice: &str, names: &[&str]) -> Option<(usize, usize)> {
    let find = |tok: &str| names.iter().position(|n| *n == tok);
    if let Some((a, b)) = choice.split_once(',') {
        return Some((find(a.trim())?, find(b.trim())?));
    }
    for (i, first) in names.iter().enumerate() {
        if let Some(rest) = choice.strip_prefix(first) {
            if let Some(j) = find(rest) {
                return Some((i, j));
            }
        }
    }
    None
}
