//! Minimal SVG line charts with a logarithmic value axis.

use std::fmt::Write;

use coreg_core::sim::SimTrace;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 44.0;
/// Values below this are drawn at the floor of the log axis.
const LOG_FLOOR: f64 = 1e-16;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn decade_range(panels: &Panel) -> (i32, i32) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &panels.series {
        for &v in &s.values {
            let v = v.abs().max(LOG_FLOOR).log10();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return (-1, 1);
    }
    let (lo, hi) = (lo.floor() as i32, hi.ceil() as i32);
    if lo == hi {
        (lo - 1, hi + 1)
    } else {
        (lo, hi)
    }
}

fn draw_panel(out: &mut String, panel: &Panel, top: f64) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let x0 = MARGIN_L;
    let y0 = top + MARGIN_T;
    let len = panel
        .series
        .iter()
        .map(|s| s.values.len())
        .max()
        .unwrap_or(0);
    let t_max = len.saturating_sub(1).max(1) as f64;
    let (d_lo, d_hi) = decade_range(panel);
    let span = f64::from(d_hi - d_lo);
    let px = |t: f64| x0 + plot_w * t / t_max;
    let py = |v: f64| {
        let d = v.abs().max(LOG_FLOOR).log10();
        y0 + plot_h * (f64::from(d_hi) - d) / span
    };

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="15" text-anchor="middle">{}</text>"#,
        x0 + plot_w / 2.0,
        top + 22.0,
        panel.title
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##
    );
    let step = ((d_hi - d_lo) as usize).div_ceil(8).max(1);
    for d in (d_lo..=d_hi).step_by(step) {
        let y = y0 + plot_h * f64::from(d_hi - d) / span;
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">1e{d}</text>"##,
            x0 + plot_w,
            x0 - 6.0,
            y + 4.0
        );
    }
    for k in 0..=5 {
        let t = t_max * f64::from(k) / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.0}</text>"#,
            px(t),
            y0 + plot_h + 16.0,
            t
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">t</text>"#,
        x0 + plot_w / 2.0,
        y0 + plot_h + 34.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        y0 + plot_h / 2.0,
        y0 + plot_h / 2.0,
        panel.y_label
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (t, &v) in s.values.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", px(t as f64), py(v));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            points.trim_end()
        );
        let ly = y0 + 14.0 + 16.0 * k as f64;
        let lx = x0 + plot_w - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            s.label
        );
    }
}

/// Stacks the panels vertically into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, PANEL_H * k as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Per-follower series picked from every tick of a trace.
pub fn agent_series(
    trace: &SimTrace,
    pick: impl Fn(&coreg_core::sim::AgentRecord) -> f64,
) -> Vec<Series> {
    let n = trace.ticks.first().map_or(0, |r| r.agents.len());
    (0..n)
        .map(|k| Series {
            label: format!("agent {}", k + 1),
            values: trace.ticks.iter().map(|r| pick(&r.agents[k])).collect(),
        })
        .collect()
}

/// Tracking errors `max |e_i|` and state-estimation errors `‖η_i - v‖`.
pub fn error_chart(trace: &SimTrace) -> String {
    render(&[
        Panel {
            title: "Tracking error".into(),
            y_label: "max |e_i(t)|".into(),
            series: agent_series(trace, |a| a.max_abs_e()),
        },
        Panel {
            title: "Leader state estimation error".into(),
            y_label: "‖η_i(t) − v(t)‖".into(),
            series: agent_series(trace, |a| a.err_eta),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed_and_deterministic() {
        let panel = || Panel {
            title: "decay".into(),
            y_label: "value".into(),
            series: vec![
                Series {
                    label: "a".into(),
                    values: (0..50).map(|t| 0.5f64.powi(t)).collect(),
                },
                Series {
                    label: "b".into(),
                    values: vec![0.0; 50],
                },
            ],
        };
        let svg = render(&[panel()]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg, render(&[panel()]));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
