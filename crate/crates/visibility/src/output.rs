//! CSV and SVG emitters. Every file starts with a header comment carrying the
//! tool version and a hash of the generating configuration, and all numeric
//! formatting is deterministic, so identical configs produce identical bytes.

use crate::bounds::BoundCurve;
use std::fmt::Write as _;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a over the canonical config string.
pub fn config_hash(config: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in config.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// `# visibility <version> config=<hash> <config>` comment line.
pub fn header(config: &str) -> String {
    format!(
        "# visibility {TOOL_VERSION} config={:016x} {config}\n",
        config_hash(config)
    )
}

/// CSV table with a header comment, a column row, and `Display`-formatted
/// cells (shortest round-trip representation for floats).
pub fn csv(config: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header(config);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &std::path::Path, contents: &str) -> crate::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Stroke style per curve in the overlay: mirrors the reference figure
/// (dotted prior bound, dashed quadratic, thin combined, thick numeric curve).
fn style(source: crate::bounds::BoundSource) -> &'static str {
    use crate::bounds::BoundSource::*;
    match source {
        LpLegendre => "stroke=\"#000000\" stroke-width=\"2.5\"",
        Combined => "stroke=\"#cc2222\" stroke-width=\"1\"",
        ThmTt2a | ThmTt2bAsymptotic => {
            "stroke=\"#cc2222\" stroke-width=\"1\" stroke-dasharray=\"6,4\""
        }
        ThmTt1 => "stroke=\"#cc8822\" stroke-width=\"1\" stroke-dasharray=\"2,2\"",
        PriorT2 => "stroke=\"#2222cc\" stroke-width=\"1.5\" stroke-dasharray=\"1,3\"",
    }
}

/// Minimal line-chart SVG of the bound curves over x in [0, 1].
pub fn svg_overlay(config: &str, curves: &[BoundCurve]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 50.0;
    let y_max = curves
        .iter()
        .flat_map(|c| c.ys.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let map_x = |x: f64| MARGIN + x * (W - 2.0 * MARGIN);
    let map_y = |y: f64| H - MARGIN - (y.max(0.0) / y_max) * (H - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<!-- {}-->", header(config).trim_start_matches("# "));
    let _ = writeln!(
        out,
        "<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>"
    );
    // Axes.
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\" stroke-width=\"1\"/>",
        map_x(0.0), map_y(0.0), map_x(1.0), map_y(0.0)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\" stroke-width=\"1\"/>",
        map_x(0.0), map_y(0.0), map_x(0.0), map_y(y_max)
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{tick}</text>",
            map_x(tick),
            H - MARGIN + 16.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{y_max:.3}</text>",
        MARGIN - 6.0,
        map_y(y_max) + 4.0
    );
    for curve in curves {
        let mut path = String::new();
        for (k, (&x, &y)) in curve.xs.iter().zip(&curve.ys).enumerate() {
            let _ = write!(
                path,
                "{}{:.2},{:.2} ",
                if k == 0 { "M" } else { "L" },
                map_x(x),
                map_y(y)
            );
        }
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" {}><title>{}</title></path>",
            path.trim_end(),
            style(curve.source),
            curve.source
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundCurve, BoundSource};

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = config_hash("dim=2 n=100");
        let b = config_hash("dim=2 n=100");
        let c = config_hash("dim=2 n=101");
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_embeds_header_and_rows() {
        let text = csv(
            "cmd=test",
            &["x", "y"],
            &[vec!["0".into(), "1.5".into()], vec!["1".into(), "2".into()]],
        );
        let mut lines = text.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("# visibility "));
        assert!(head.contains("config="));
        assert!(head.contains("cmd=test"));
        assert_eq!(lines.next().unwrap(), "x,y");
        assert_eq!(lines.next().unwrap(), "0,1.5");
        assert_eq!(lines.next().unwrap(), "1,2");
    }

    #[test]
    fn svg_contains_one_path_per_curve() {
        let curve = |s| BoundCurve {
            source: s,
            xs: vec![0.0, 0.5, 1.0],
            ys: vec![0.0, 0.2, 0.9],
        };
        let svg = svg_overlay(
            "cmd=svg",
            &[curve(BoundSource::LpLegendre), curve(BoundSource::Combined)],
        );
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("</svg>"));
    }
}
