use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, px(WIDTH / 2.0), escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    /// Tick ranges, which may sit inside the plotted range.
    xt: (f64, f64),
    yt: (f64, f64),
}

impl Frame {
    fn sx(&self, v: f64) -> f64 {
        LEFT + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, px(l), px(t), px(r - l), px(b - t));
        for k in 0..=5 {
            let xv = self.xt.0 + (self.xt.1 - self.xt.0) * k as f64 / 5.0;
            let yv = self.yt.0 + (self.yt.1 - self.yt.0) * k as f64 / 5.0;
            let (x, y) = (self.sx(xv), self.sy(yv));
            let _ = writeln!(out, r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="black"/>"#, x = px(x), b = px(b), b2 = px(b + 5.0));
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(x), px(b + 18.0), tick_label(xv));
            let _ = writeln!(out, r#"<line x1="{l2}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/>"#, l2 = px(l - 5.0), l = px(l), y = px(y));
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, px(l - 8.0), px(y + 4.0), tick_label(yv));
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px((l + r) / 2.0), px(HEIGHT - 15.0), escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
            escape(ylabel),
            y = px((t + b) / 2.0)
        );
    }
}

/// Line chart of several series over a shared abscissa, with an optional shaded band.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], series: &[(String, Vec<f64>)], band: Option<(f64, f64)>) -> String {
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0_f64, 0.0_f64), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let x0 = xs.first().copied().unwrap_or(0.0);
    let x1 = xs.last().copied().filter(|&v| v > x0).unwrap_or(x0 + 1.0);
    let frame = Frame { x0, x1, y0: lo - pad, y1: hi + pad, xt: (x0, x1), yt: (lo - pad, hi + pad) };
    let mut out = String::new();
    header(&mut out, title);
    if let Some((a, b)) = band {
        let (xa, xb) = (frame.sx(a.max(frame.x0)), frame.sx(b.min(frame.x1)));
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#cccccc" fill-opacity="0.5"/>"##,
            px(xa),
            px(TOP),
            px((xb - xa).max(1.0)),
            px(HEIGHT - TOP - BOTTOM)
        );
    }
    let zero = frame.sy(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{z}" x2="{}" y2="{z}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        px(LEFT),
        px(WIDTH - RIGHT),
        z = px(zero)
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{},{}", px(frame.sx(x)), px(frame.sy(y))))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#, pts.join(" "));
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, px(lx), px(ly), px(lx + 20.0), px(ly));
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, px(lx + 26.0), px(ly + 4.0), escape(name));
    }
    if band.is_some() {
        let ly = TOP + 14.0 + 18.0 * series.len() as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(out, r##"<rect x="{}" y="{}" width="20" height="10" fill="#cccccc"/>"##, px(lx), px(ly - 5.0));
        let _ = writeln!(out, r#"<text x="{}" y="{}">no-trade band</text>"#, px(lx + 26.0), px(ly + 4.0));
    }
    frame.axes(&mut out, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// Both the solver and the closed form report no trade.
    NoTrade,
    Trade,
    /// Solver and closed form disagree.
    Mismatch,
}

/// Heat map on a regular grid. `cells[j * xs.len() + i]` belongs to `(xs[i], ys[j])`;
/// `shade` in `[0, 1]` sets the intensity of trade cells.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64], cells: &[(Cell, f64)]) -> String {
    let half = |v: &[f64]| if v.len() > 1 { (v[1] - v[0]) / 2.0 } else { 0.5 };
    let (hx, hy) = (half(xs), half(ys));
    let frame = Frame {
        x0: xs[0] - hx,
        x1: xs[xs.len() - 1] + hx,
        y0: ys[0] - hy,
        y1: ys[ys.len() - 1] + hy,
        xt: (xs[0], xs[xs.len() - 1]),
        yt: (ys[0], ys[ys.len() - 1]),
    };
    let mut out = String::new();
    header(&mut out, title);
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let (cell, shade) = cells[j * xs.len() + i];
            let fill = match cell {
                Cell::NoTrade => "#ffffff".to_string(),
                Cell::Mismatch => "#d62728".to_string(),
                Cell::Trade => {
                    let s = shade.clamp(0.0, 1.0);
                    let c = |lo: f64, hi: f64| (lo + (hi - lo) * s).round() as u8;
                    format!("#{:02x}{:02x}{:02x}", c(198.0, 8.0), c(219.0, 48.0), c(239.0, 107.0))
                }
            };
            let (xa, xb) = (frame.sx(x - hx), frame.sx(x + hx));
            let (ya, yb) = (frame.sy(y + hy), frame.sy(y - hy));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" shape-rendering="crispEdges"/>"#,
                px(xa),
                px(ya),
                px(xb - xa + 0.3),
                px(yb - ya + 0.3)
            );
        }
    }
    let lx = WIDTH - RIGHT + 14.0;
    let legend = [("#ffffff", "no trade"), ("#2171b5", "trade, darker = more profit"), ("#d62728", "flags disagree")];
    for (k, (color, label)) in legend.iter().enumerate() {
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="14" height="10" fill="{color}" stroke="black"/>"#, px(lx), px(ly - 5.0));
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">{label}</text>"#, px(lx + 20.0), px(ly + 4.0));
    }
    frame.axes(&mut out, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}
