use std::fmt::Write;

use super::scene::Scene;
use crate::functions::format_short;

fn n(x: f64) -> String {
    format_short(x)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// `#RRGGBB` or `#RRGGBBAA` split into color and optional opacity; anything
/// else renders black.
fn split_fill(fill: &str) -> (String, Option<f64>) {
    let hex = fill.strip_prefix('#').unwrap_or("");
    let valid = hex.chars().all(|c| c.is_ascii_hexdigit());
    match (valid, hex.len()) {
        (true, 6) => (format!("#{hex}"), None),
        (true, 8) => {
            let alpha = u8::from_str_radix(&hex[6..], 16).expect("validated hex");
            (format!("#{}", &hex[..6]), Some(f64::from(alpha) / 255.0))
        }
        _ => ("#000000".into(), None),
    }
}

/// Deterministic SVG 1.1 rendering. Negative sizes draw as zero.
pub fn render_svg(scene: &Scene, width: f64, height: f64) -> String {
    let (w, h) = (n(width.max(0.0)), n(height.max(0.0)));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    for node in &scene.nodes {
        let (nw, nh) = (node.width.max(0.0), node.height.max(0.0));
        let (cx, cy) = (node.abs_x + nw / 2.0, node.abs_y + nh / 2.0);
        let transform = if node.rot != 0.0 {
            format!(r#" transform="rotate({} {} {})""#, n(node.rot), n(cx), n(cy))
        } else {
            String::new()
        };
        let (fill, opacity) = split_fill(&node.fill);
        let opacity = opacity
            .map(|a| format!(r#" fill-opacity="{}""#, n(a)))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"  <rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"{opacity}{transform}/>"#,
            n(node.abs_x),
            n(node.abs_y),
            n(nw),
            n(nh),
        );
        if !node.text.is_empty() {
            let _ = writeln!(
                out,
                r##"  <text x="{}" y="{}" font-size="{}" text-anchor="middle" dominant-baseline="central" fill="#000000"{transform}>{}</text>"##,
                n(cx),
                n(cy),
                n(node.text_size),
                escape(&node.text),
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
