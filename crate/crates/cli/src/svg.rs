//! Minimal self-contained SVG previews. The CSVs are the data contract; these
//! exist so a run directory can be eyeballed without plotting tools.

/// One named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f6fb4", "#d1495b", "#2e8b57", "#e28a2b", "#6a4c93", "#3aafa9"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// Log-aware line chart. Points with non-positive coordinates on a log axis
/// are dropped rather than silently clamped.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_x: bool,
    log_y: bool,
    series: &[Series],
) -> String {
    let tx = |x: f64| if log_x { x.log2() } else { x };
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let visible = |&(x, y): &(f64, f64)| (!log_x || x > 0.0) && (!log_y || y > 0.0);

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for p in s.points.iter().filter(|p| visible(p)) {
            xs.push(tx(p.0));
            ys.push(ty(p.1));
        }
    }
    let (x_min, x_max) = span(&xs);
    let (y_min, y_max) = span(&ys);

    let px = |x: f64| {
        MARGIN_LEFT + (tx(x) - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    };
    let py = |y: f64| {
        HEIGHT - MARGIN_BOTTOM
            - (ty(y) - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // Axes with five ticks per side, back-transformed for the labels.
    out.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM,
        HEIGHT - MARGIN_BOTTOM
    ));
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let vx = x_min + f * (x_max - x_min);
        let vy = y_min + f * (y_max - y_min);
        let gx = MARGIN_LEFT + f * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let gy = HEIGHT - MARGIN_BOTTOM - f * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        let label_x = if log_x { vx.exp2() } else { vx };
        let label_y = if log_y { 10f64.powf(vy) } else { vy };
        out.push_str(&format!(
            "<line x1=\"{gx:.1}\" y1=\"{:.1}\" x2=\"{gx:.1}\" y2=\"{:.1}\" stroke=\"#999\"/>\n\
             <text x=\"{gx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
             <line x1=\"{:.1}\" y1=\"{gy:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{gy:.1}\" stroke=\"#999\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 4.0,
            HEIGHT - MARGIN_BOTTOM + 18.0,
            tick_label(label_x),
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 8.0,
            gy + 4.0,
            tick_label(label_y)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0,
        escape(x_label),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    ));

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| visible(p))
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        if path.len() > 1 {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in s.points.iter().filter(|p| visible(p)) {
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
        }
        let ly = MARGIN_TOP + 14.0 * idx as f64 + 10.0;
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            WIDTH - MARGIN_RIGHT - 150.0,
            WIDTH - MARGIN_RIGHT - 126.0,
            WIDTH - MARGIN_RIGHT - 120.0,
            ly + 4.0,
            escape(&s.name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Magnitude heat map of a dim×dim matrix (row-major), white at zero up to a
/// full-strength blue at the matrix maximum.
pub fn heatmap(title: &str, dim: usize, magnitudes: &[f64]) -> String {
    debug_assert_eq!(magnitudes.len(), dim * dim);
    let max = magnitudes.iter().copied().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let cell = (480.0 / dim as f64).min(24.0);
    let origin = (60.0, 40.0);
    let size = cell * dim as f64;
    let width = origin.0 + size + 24.0;
    let height = origin.1 + size + 24.0;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.1}\" height=\"{height:.1}\" \
         viewBox=\"0 0 {width:.1} {height:.1}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{width:.1}\" height=\"{height:.1}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2.0,
        escape(title)
    );
    for a in 0..dim {
        for b in 0..dim {
            let t = magnitudes[a * dim + b] / max;
            // White (255,255,255) toward #1f6fb4 (31,111,180).
            let r = (255.0 - t * (255.0 - 31.0)) as u8;
            let g = (255.0 - t * (255.0 - 111.0)) as u8;
            let bl = (255.0 - t * (255.0 - 180.0)) as u8;
            out.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" \
                 fill=\"rgb({r},{g},{bl})\"/>\n",
                origin.0 + b as f64 * cell,
                origin.1 + a as f64 * cell
            ));
        }
    }
    out.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{size:.1}\" height=\"{size:.1}\" \
         fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\">max |entry| = {}</text>\n</svg>\n",
        origin.0,
        origin.1,
        origin.0,
        origin.1 + size + 16.0,
        tick_label(max)
    ));
    out
}

fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
