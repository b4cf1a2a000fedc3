//! Accuracy-vs-κ line charts as standalone SVG 1.1.

use std::fmt::Write as _;

use super::AggregatePoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Series<'a> {
    model: &'a str,
    points: Vec<(f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one line per model with a shaded 95% band. Points without a
/// successful run are skipped.
pub fn render_curves(points: &[AggregatePoint], x_label: &str) -> String {
    let mut series: Vec<Series> = Vec::new();
    for p in points {
        let Some(mean) = p.mean else { continue };
        let idx = match series.iter().position(|s| s.model == p.model) {
            Some(i) => i,
            None => {
                series.push(Series {
                    model: &p.model,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[idx].points.push((p.kappa, mean, p.ci95));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(k, _, _) in series.iter().flat_map(|s| &s.points) {
        x_min = x_min.min(k);
        x_max = x_max.max(k);
    }
    if !x_min.is_finite() {
        (x_min, x_max) = (0.0, 1.0);
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| LEFT + (k - x_min) / (x_max - x_min) * plot_w;
    let sy = |a: f64| TOP + (1.0 - a.clamp(0.0, 1.0)) * plot_h;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    for i in 0..=5 {
        let a = i as f64 / 5.0;
        let y = sy(a);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{a:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let k = x_min + (x_max - x_min) * i as f64 / 4.0;
        let x = sx(k);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            (k * 1000.0).round() / 1000.0
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">accuracy</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let upper: Vec<String> = s
            .points
            .iter()
            .map(|&(k, m, h)| format!("{:.2},{:.2}", sx(k), sy(m + h)))
            .collect();
        let lower: Vec<String> = s
            .points
            .iter()
            .rev()
            .map(|&(k, m, h)| format!("{:.2},{:.2}", sx(k), sy(m - h)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|&(k, m, _)| format!("{:.2},{:.2}", sx(k), sy(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for &(k, m, _) in &s.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(k),
                sy(m)
            );
        }
        let ly = TOP + 10.0 + 18.0 * idx as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(s.model)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(model: &str, kappa: f64, mean: f64) -> AggregatePoint {
        AggregatePoint {
            model: model.into(),
            perturbation: "remove".into(),
            variant: String::new(),
            kappa,
            n: 3,
            mean: Some(mean),
            ci95: 0.02,
        }
    }

    #[test]
    fn single_point_has_one_marker() {
        let svg = render_curves(&[point("mlp", 0.0, 0.8)], "kappa");
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.starts_with("<?xml") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn two_models_two_curves() {
        let pts: Vec<_> = (0..11)
            .flat_map(|i| {
                let k = i as f64 / 10.0;
                [point("gcn", k, 0.9 - k / 4.0), point("mlp", k, 0.8)]
            })
            .collect();
        let svg = render_curves(&pts, "kappa");
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
        assert_eq!(svg.matches(r#"class="band""#).count(), 2);
        assert_eq!(svg.matches("<circle").count(), 22);
        assert_eq!(svg, render_curves(&pts, "kappa"));
    }
}
