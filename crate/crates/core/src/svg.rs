//! Hand-rolled SVG line plots for performance profiles. No plotting stack;
//! just axes, log2 ticks, and polylines.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn x_pixel(log2x: f64, lo: f64, hi: f64) -> f64 {
    MARGIN_LEFT + (log2x - lo) / (hi - lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y_pixel(y: f64) -> f64 {
    let span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    HEIGHT - MARGIN_BOTTOM - y.clamp(0.0, 1.0) * span
}

/// Render profile curves: x on a log2 axis over 2^-2..2^7, y in 0..1.
pub fn profile_plot(title: &str, curves: &[(String, &[f64], &[f64])]) -> String {
    let lo = -2.0;
    let hi = 7.0;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        escape(title)
    ));

    // shade the region where the method is more costly than the baseline
    let x1 = x_pixel(lo, lo, hi);
    let x_parity = x_pixel(0.0, lo, hi);
    out.push_str(&format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#f2f2f2\"/>\n",
        x1,
        MARGIN_TOP,
        x_parity - x1,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    ));

    // gridlines and ticks
    for k in -2..=7 {
        let x = x_pixel(k as f64, lo, hi);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        ));
        let label = if k < 0 {
            format!("1/{}", 1u32 << (-k) as u32)
        } else {
            format!("{}", 1u64 << k as u64)
        };
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{label}x</text>\n",
            HEIGHT - MARGIN_BOTTOM + 18.0
        ));
    }
    for i in 0..=4 {
        let y = i as f64 * 0.25;
        let yp = y_pixel(y);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{y:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            yp + 4.0
        ));
    }
    // axes
    out.push_str(&format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">work reduction factor</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">fraction of problems</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    for (idx, (label, xs, ys)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for (x, y) in xs.iter().zip(ys.iter()) {
            points.push_str(&format!("{:.2},{:.2} ", x_pixel(x.log2(), lo, hi), y_pixel(*y)));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        let ly = MARGIN_TOP + 14.0 + 16.0 * idx as f64;
        let lx = WIDTH - MARGIN_RIGHT + 10.0;
        out.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" \
             font-size=\"10\">{}</text>\n",
            lx + 24.0,
            escape(label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_contains_curves_and_axes() {
        let xs = vec![0.25, 1.0, 4.0, 128.0];
        let ys = vec![1.0, 1.0, 0.5, 0.0];
        let svg = profile_plot("ic", &[("ic:droptol=1e-6".to_string(), &xs[..], &ys[..])]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("ic:droptol=1e-6"));
        assert!(svg.contains("128x"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn labels_are_escaped() {
        let xs = vec![1.0];
        let ys = vec![1.0];
        let svg = profile_plot("a<b", &[("x&y".to_string(), &xs[..], &ys[..])]);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("x&amp;y"));
    }
}
