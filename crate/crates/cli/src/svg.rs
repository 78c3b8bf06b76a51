//! Minimal SVG emitter for the univariate Lebesgue-function plot.

/// Renders `(x, lambda(x))` samples as a polyline with axis labels.
pub fn lebesgue_plot(samples: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 48.0;

    let (x_min, x_max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let y_max = samples.iter().fold(0.0f64, |hi, &(_, y)| hi.max(y));
    let x_span = (x_max - x_min).max(f64::MIN_POSITIVE);
    let y_span = y_max.max(f64::MIN_POSITIVE);

    let px = |x: f64| MARGIN + (x - x_min) / x_span * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y / y_span * (H - 2.0 * MARGIN);

    let mut points = String::new();
    for &(x, y) in samples {
        points.push_str(&format!("{:.2},{:.2} ", px(x), py(y)));
    }

    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<line x1=\"{m}\" y1=\"{ybase}\" x2=\"{xend}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{points}\"/>\n",
            "<text x=\"{m}\" y=\"{h_label}\" font-size=\"12\">{xmin:.4}</text>\n",
            "<text x=\"{xend}\" y=\"{h_label}\" font-size=\"12\" text-anchor=\"end\">{xmax:.4}</text>\n",
            "<text x=\"{m}\" y=\"{ytop}\" font-size=\"12\">max {ymax:.6}</text>\n",
            "</svg>\n"
        ),
        w = W,
        h = H,
        m = MARGIN,
        ybase = H - MARGIN,
        xend = W - MARGIN,
        h_label = H - MARGIN / 2.0,
        ytop = MARGIN - 8.0,
        points = points.trim_end(),
        xmin = x_min,
        xmax = x_max,
        ymax = y_max,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_wellformed_svg() {
        let samples: Vec<(f64, f64)> = (0..=10)
            .map(|i| {
                let x = i as f64 / 10.0;
                (x, 1.0 + x * x)
            })
            .collect();
        let svg = lebesgue_plot(&samples);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("max 2.000000"));
    }
}
