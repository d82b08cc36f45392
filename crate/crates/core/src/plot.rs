//! Static SVG persistence diagrams: quadrant axes through the origin, the
//! diagonal, finite pairs colored by kernel density and essential pairs as
//! upward arrows.

use std::fmt::Write as _;
use std::path::Path;

use crate::cubical::Diagram;
use crate::error::Result;
use crate::io::{write_text, Provenance};
use crate::metrics::density_scores;

const SIZE: f64 = 420.0;
const MARGIN: f64 = 48.0;
const PAD: f64 = 0.1;

// low to high density
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (RAMP[i][k] + (RAMP[i + 1][k] - RAMP[i][k]) * f).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Maps data values to pixels; the same range is used on both axes.
struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo) / (self.hi - self.lo) * SIZE
    }

    fn py(&self, v: f64) -> f64 {
        MARGIN + SIZE - (v - self.lo) / (self.hi - self.lo) * SIZE
    }
}

pub fn plot_svg_string(dgm: &Diagram, dim: u8, sigma: f64, prov: Option<&Provenance>) -> String {
    let finite: Vec<(f64, f64)> = dgm
        .in_dim(dim)
        .filter(|p| !p.is_essential())
        .map(|p| (p.birth, p.death))
        .collect();
    let essential: Vec<f64> = dgm
        .in_dim(dim)
        .filter(|p| p.is_essential())
        .map(|p| p.birth)
        .collect();

    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &(b, d) in &finite {
        lo = lo.min(b).min(d);
        hi = hi.max(b).max(d);
    }
    for &b in &essential {
        lo = lo.min(b);
        hi = hi.max(b);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let fr = Frame {
        lo: lo - PAD * span,
        hi: hi + PAD * span,
    };

    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}" font-family="sans-serif" font-size="11">"#
    );
    if let Some(prov) = prov {
        let _ = writeln!(
            s,
            "<metadata>{}</metadata>",
            escape(&serde_json::to_string(prov).unwrap())
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#999999"/>"##
    );
    let (x0, y0) = (fr.px(0.0), fr.py(0.0));
    let (left, right, top, bottom) = (MARGIN, MARGIN + SIZE, MARGIN, MARGIN + SIZE);
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{left:.2}" y1="{y0:.2}" x2="{right:.2}" y2="{y0:.2}" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{x0:.2}" y1="{top:.2}" x2="{x0:.2}" y2="{bottom:.2}" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r##"<line class="diagonal" x1="{left:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{top:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##
    );
    for (label, x, y) in [
        ("NW", left + 6.0, top + 14.0),
        ("NE", right - 22.0, top + 14.0),
        ("SW", left + 6.0, bottom - 6.0),
    ] {
        let _ = writeln!(
            s,
            r##"<text x="{x:.2}" y="{y:.2}" fill="#777777">{label}</text>"##
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">birth</text>"#,
        MARGIN + SIZE / 2.0,
        total - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">death</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">H{dim}  ({} finite, {} essential)</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN - 16.0,
        finite.len(),
        essential.len()
    );
    for (v, anchor) in [(fr.lo, "start"), (fr.hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v:.2}</text>"#,
            fr.px(v),
            bottom + 14.0
        );
    }

    let dens = density_scores(dgm, dim, sigma);
    let max = dens.iter().copied().fold(0.0, f64::max);
    let min = dens.iter().copied().fold(f64::INFINITY, f64::min);
    // draw dense points last so they stay visible
    let mut order: Vec<usize> = (0..finite.len()).collect();
    order.sort_by(|&a, &b| dens[a].total_cmp(&dens[b]).then(a.cmp(&b)));
    for i in order {
        let (b, d) = finite[i];
        let t = if max > min {
            (dens[i] - min) / (max - min)
        } else {
            0.5
        };
        let _ = writeln!(
            s,
            r##"<circle class="pair" data-birth="{b}" data-death="{d}" cx="{:.2}" cy="{:.2}" r="3" fill="{}" stroke="#222222" stroke-width="0.4"/>"##,
            fr.px(b),
            fr.py(d),
            ramp(t)
        );
    }
    for &b in &essential {
        let (x, y) = (fr.px(b), fr.py(b));
        let _ = writeln!(
            s,
            r##"<g class="essential" data-birth="{b}"><line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1.5"/><path d="M {:.2} {:.2} L {x:.2} {top:.2} L {:.2} {:.2} Z" fill="#c0392b"/></g>"##,
            top + 6.0,
            x - 4.0,
            top + 8.0,
            x + 4.0,
            top + 8.0
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn plot_svg(dgm: &Diagram, dim: u8, sigma: f64, path: &Path) -> Result<()> {
    write_text(path, &plot_svg_string(dgm, dim, sigma, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubical::{DiagramMeta, PersistencePair};

    fn attr(tag: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        tag[start..].split('"').next().unwrap().parse().unwrap()
    }

    fn origin(svg: &str) -> (f64, f64) {
        let axes: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("class=\"axis\""))
            .collect();
        (attr(axes[1], "x1"), attr(axes[0], "y1"))
    }

    #[test]
    fn empty_diagram_has_axes_only() {
        let svg = plot_svg_string(&Diagram::default(), 1, 0.5, None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("class=\"axis\"").count(), 2);
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn pair_lands_in_nw_quadrant() {
        let d = Diagram::new(
            vec![PersistencePair::finite(1, -3.0, 10.0)],
            DiagramMeta::default(),
        );
        let svg = plot_svg_string(&d, 1, 0.5, None);
        let circles: Vec<&str> = svg.lines().filter(|l| l.contains("<circle")).collect();
        assert_eq!(circles.len(), 1);
        let (ox, oy) = origin(&svg);
        // left of the vertical axis, above the horizontal one
        assert!(attr(circles[0], "cx") < ox);
        assert!(attr(circles[0], "cy") < oy);
        assert_eq!(attr(circles[0], "data-birth"), -3.0);
    }

    #[test]
    fn essential_pairs_are_arrows() {
        let d = Diagram::new(
            vec![PersistencePair::essential(0, -5.0)],
            DiagramMeta::default(),
        );
        let svg = plot_svg_string(&d, 0, 0.5, None);
        assert_eq!(svg.matches("class=\"essential\"").count(), 1);
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn metadata_is_escaped() {
        let prov = Provenance::new(serde_json::json!({"shape": "a<b&c"}), None);
        let svg = plot_svg_string(&Diagram::default(), 0, 0.5, Some(&prov));
        assert!(svg.contains("a&lt;b&amp;c"));
    }
}
