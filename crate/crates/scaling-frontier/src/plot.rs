//! Minimal native SVG renderer for log-log charts.
//!
//! Output is a pure function of the plotted data: fixed 800x600 viewport,
//! decade gridlines, fixed palette, fixed float formatting. No external
//! plotting toolchain.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 64.0;

const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// A log-log chart: polylines plus optional emphasis markers.
#[derive(Debug, Clone, Default)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<(f64, f64)>,
}

impl LogLogPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LogLogPlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            markers: Vec::new(),
        }
    }

    pub fn add_series(&mut self, label: &str, points: Vec<(f64, f64)>, dashed: bool) {
        self.series.push(Series { label: label.into(), points, dashed });
    }

    /// Render to an SVG document string.
    pub fn render(&self) -> String {
        let mut lx_min = f64::INFINITY;
        let mut lx_max = f64::NEG_INFINITY;
        let mut ly_min = f64::INFINITY;
        let mut ly_max = f64::NEG_INFINITY;
        let finite = |v: f64| v.is_finite() && v > 0.0;
        for s in &self.series {
            for &(x, y) in &s.points {
                if finite(x) && finite(y) {
                    lx_min = lx_min.min(x.log10());
                    lx_max = lx_max.max(x.log10());
                    ly_min = ly_min.min(y.log10());
                    ly_max = ly_max.max(y.log10());
                }
            }
        }
        for &(x, y) in &self.markers {
            if finite(x) && finite(y) {
                lx_min = lx_min.min(x.log10());
                lx_max = lx_max.max(x.log10());
                ly_min = ly_min.min(y.log10());
                ly_max = ly_max.max(y.log10());
            }
        }
        if !lx_min.is_finite() {
            lx_min = 0.0;
            lx_max = 1.0;
            ly_min = 0.0;
            ly_max = 1.0;
        }
        // Pad degenerate ranges, then snap to whole decades for tick labels.
        if lx_max - lx_min < 1e-9 {
            lx_min -= 0.5;
            lx_max += 0.5;
        }
        if ly_max - ly_min < 1e-9 {
            ly_min -= 0.5;
            ly_max += 0.5;
        }
        let x0 = lx_min.floor();
        let x1 = lx_max.ceil();
        let y0 = ly_min.floor();
        let y1 = ly_max.ceil();
        let px = |lx: f64| MARGIN_L + (lx - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |ly: f64| HEIGHT - MARGIN_B - (ly - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"15\" \
             text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));
        // Decade gridlines and tick labels.
        let mut dx = x0 as i64;
        while dx <= x1 as i64 {
            let x = px(dx as f64);
            svg.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                py(y1),
                py(y0)
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" \
                 text-anchor=\"middle\">1e{dx}</text>\n",
                HEIGHT - MARGIN_B + 18.0
            ));
            dx += 1;
        }
        let mut dy = y0 as i64;
        while dy <= y1 as i64 {
            let y = py(dy as f64);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                px(x0),
                px(x1)
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"11\" \
                 text-anchor=\"end\">1e{dy}</text>\n",
                MARGIN_L - 6.0
            ));
            dy += 1;
        }
        // Axes.
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" \
             stroke-width=\"1.5\"/>\n",
            px(x0),
            py(y0),
            px(x1),
            py(y0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" \
             stroke-width=\"1.5\"/>\n",
            px(x0),
            py(y0),
            px(x0),
            py(y1)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
             text-anchor=\"middle\">{}</text>\n",
            (px(x0) + px(x1)) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
             text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (py(y0) + py(y1)) / 2.0,
            (py(y0) + py(y1)) / 2.0,
            escape(&self.y_label)
        ));
        // Series.
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if s.dashed { " stroke-dasharray=\"7,5\"" } else { "" };
            let mut path = String::new();
            for &(x, y) in &s.points {
                if finite(x) && finite(y) {
                    if path.is_empty() {
                        path.push('M');
                    } else {
                        path.push('L');
                    }
                    path.push_str(&format!("{:.2} {:.2}", px(x.log10()), py(y.log10())));
                }
            }
            if !path.is_empty() {
                svg.push_str(&format!(
                    "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" \
                     stroke-width=\"1.8\"{dash}/>\n"
                ));
            }
            let ly = MARGIN_T + 16.0 * i as f64;
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
                 stroke=\"{color}\" stroke-width=\"3\"{dash}/>\n",
                WIDTH - MARGIN_R - 190.0,
                WIDTH - MARGIN_R - 160.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_R - 152.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        for &(x, y) in &self.markers {
            if finite(x) && finite(y) {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"black\"/>\n",
                    px(x.log10()),
                    py(y.log10())
                ));
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic_and_well_formed() {
        let mut plot = LogLogPlot::new("bound vs width", "n", "nats");
        plot.add_series("C=1e10", vec![(1.0, 10.0), (10.0, 2.0), (100.0, 5.0)], false);
        plot.add_series("slope 1", vec![(1.0, 1.0), (100.0, 100.0)], true);
        plot.markers.push((10.0, 2.0));
        let a = plot.render();
        let b = plot.render();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("stroke-dasharray"));
        assert!(a.contains("circle"));
        assert!(a.contains("1e1"));
    }

    #[test]
    fn empty_plot_still_renders() {
        let plot = LogLogPlot::new("empty", "x", "y");
        let svg = plot.render();
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn labels_are_escaped() {
        let plot = LogLogPlot::new("a < b & c", "x", "y");
        assert!(plot.render().contains("a &lt; b &amp; c"));
    }
}
