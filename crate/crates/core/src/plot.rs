//! Static SVG line charts. Pure geometry generation, no external services.

use crate::trace::SimTrace;

/// One plotted series.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self {
            label: label.to_string(),
            points,
            color: color.to_string(),
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Chart frame settings.
#[derive(Debug, Clone)]
pub struct ChartOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
}

impl ChartOptions {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            width: 860,
            height: 420,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub fn palette_color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    if max <= min || min.is_nan() || max.is_nan() {
        return vec![min];
    }
    let raw_step = (max - min) / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    } * mag;
    let start = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut v = start;
    while v <= max + step * 1e-9 {
        ticks.push(v);
        v += step;
    }
    ticks
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Downsamples to at most `cap` points, keeping endpoints.
fn thin(points: &[(f64, f64)], cap: usize) -> Vec<(f64, f64)> {
    if points.len() <= cap {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(cap);
    let mut out: Vec<(f64, f64)> = points.iter().step_by(stride).copied().collect();
    if let Some(last) = points.last() {
        if out.last() != Some(last) {
            out.push(*last);
        }
    }
    out
}

/// Renders a line chart to SVG markup.
pub fn line_chart(series: &[Series], opts: &ChartOptions) -> String {
    let w = opts.width as f64;
    let h = opts.height as f64;
    let (ml, mr, mt, mb) = (70.0, 20.0, 36.0, 48.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        opts.width, opts.height, opts.width, opts.height
    ));
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        opts.width, opts.height
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        w / 2.0,
        xml_escape(&opts.title)
    ));

    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();

    if all.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#b00\">no data to plot</text>\n",
            w / 2.0,
            h / 2.0
        ));
        svg.push_str("</svg>\n");
        return svg;
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;
    if x_min == x_max {
        x_max += 1.0;
    }

    let to_x = |x: f64| ml + (x - x_min) / (x_max - x_min) * plot_w;
    let to_y = |y: f64| mt + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    // Grid and ticks.
    for tick in nice_ticks(x_min, x_max, 8) {
        let px = to_x(tick);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{mt}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#e0e0e0\"/>\n",
            mt + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            mt + plot_h + 16.0,
            format_tick(tick)
        ));
    }
    for tick in nice_ticks(y_min, y_max, 6) {
        let py = to_y(tick);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#e0e0e0\"/>\n",
            ml + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            ml - 6.0,
            py + 4.0,
            format_tick(tick)
        ));
    }

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        ml + plot_w / 2.0,
        h - 10.0,
        xml_escape(&opts.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0,
        xml_escape(&opts.y_label)
    ));

    // Series.
    for s in series {
        let pts = thin(&s.points, 2400);
        let mut path = String::new();
        let mut pen_down = false;
        for (x, y) in pts {
            if !x.is_finite() || !y.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            path.push_str(&format!("{cmd}{:.2} {:.2} ", to_x(x), to_y(y)));
            pen_down = true;
        }
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        svg.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.4\"{dash}/>\n",
            path.trim_end(),
            s.color
        ));
    }

    // Legend.
    let mut ly = mt + 14.0;
    for s in series {
        let lx = ml + plot_w - 170.0;
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{}\" stroke-width=\"2\"{dash}/>\n",
            ly - 4.0,
            lx + 24.0,
            ly - 4.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            lx + 30.0,
            xml_escape(&s.label)
        ));
        ly += 16.0;
    }

    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn trace_series(
    trace: &SimTrace,
    label: &str,
    color: &str,
    extract: impl Fn(&crate::trace::TraceRecord) -> f64,
) -> Series {
    Series::new(
        label,
        trace.records.iter().map(|r| (r.t, extract(r))).collect(),
        color,
    )
}

/// Estimate-vs-time chart: the four parameter estimates with dashed truth
/// reference lines.
pub fn estimates_chart(trace: &SimTrace, truth_mass: f64, truth_inertia: [f64; 3]) -> String {
    let mut series = vec![
        trace_series(trace, "mass estimate [kg]", palette_color(0), |r| r.theta1_hat),
        trace_series(trace, "Ix estimate [kg m^2]", palette_color(1), |r| r.theta2_hat_x),
        trace_series(trace, "Iy estimate [kg m^2]", palette_color(2), |r| r.theta2_hat_y),
        trace_series(trace, "Iz estimate [kg m^2]", palette_color(3), |r| r.theta2_hat_z),
    ];
    if let (Some(first), Some(last)) = (trace.records.first(), trace.records.last()) {
        let truth = [truth_mass, truth_inertia[0], truth_inertia[1], truth_inertia[2]];
        for (i, v) in truth.into_iter().enumerate() {
            series.push(
                Series::new(
                    &format!("truth {}", ["m", "Ix", "Iy", "Iz"][i]),
                    vec![(first.t, v), (last.t, v)],
                    palette_color(i),
                )
                .dashed(),
            );
        }
    }
    line_chart(
        &series,
        &ChartOptions::new("Parameter estimates", "time [s]", "estimate"),
    )
}

/// Overlay of one column from several traces.
pub fn overlay_chart(
    traces: &[(&SimTrace, &str)],
    title: &str,
    y_label: &str,
    extract: impl Fn(&crate::trace::TraceRecord) -> f64 + Copy,
) -> String {
    let series: Vec<Series> = traces
        .iter()
        .enumerate()
        .map(|(i, (trace, label))| trace_series(trace, label, palette_color(i), extract))
        .collect();
    line_chart(&series, &ChartOptions::new(title, "time [s]", y_label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRecord;

    fn tiny_trace() -> SimTrace {
        let mut trace = SimTrace::new();
        for k in 0..100 {
            let mut r = TraceRecord {
                t: k as f64 * 0.01,
                ..TraceRecord::default()
            };
            r.theta1_hat = 1.56 + k as f64 * 0.01;
            r.force_z = 30.0 + (k as f64 * 0.3).sin();
            trace.push(r);
        }
        trace
    }

    #[test]
    fn estimate_chart_contains_all_series_and_truth_lines() {
        let svg = estimates_chart(&tiny_trace(), 3.12, [0.1, 0.1, 0.2]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("mass estimate"));
        assert!(svg.contains("Iz estimate"));
        assert!(svg.contains("truth m"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_trace_renders_placeholder_warning() {
        let svg = estimates_chart(&SimTrace::new(), 3.12, [0.1, 0.1, 0.2]);
        assert!(svg.contains("no data to plot"));
    }

    #[test]
    fn overlay_handles_multiple_traces() {
        let a = tiny_trace();
        let b = tiny_trace();
        let svg = overlay_chart(
            &[(&a, "first"), (&b, "second")],
            "Thrust",
            "force [N]",
            |r| r.force_z,
        );
        assert!(svg.contains("first"));
        assert!(svg.contains("second"));
    }

    #[test]
    fn ticks_are_monotonic_and_cover_range() {
        let ticks = nice_ticks(-0.37, 12.4, 8);
        assert!(ticks.windows(2).all(|w| w[1] > w[0]));
        assert!(*ticks.first().unwrap() >= -0.37);
        assert!(*ticks.last().unwrap() <= 12.4 + 1e-9);
    }
}
