//! SVG picture of a decomposed layout.
//!
//! One `group` capsule per template, one `via` square per via (class
//! `mask-N`), one `conflict` line per unresolved conflict and one `hotspot`
//! rectangle per realized hotspot. Output depends only on the inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::hotspot::HotspotLibrary;
use crate::layout::Layout;
use crate::verify::ViolationReport;

const MARGIN: i64 = 40;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub fn render_svg(
    layout: &Layout,
    decomposition: &Decomposition,
    report: &ViolationReport,
    library: &HotspotLibrary,
) -> String {
    let half = library.tech.via_width / 2;
    let (x0, y0, x1, y1) = layout
        .bbox()
        .map_or((0, 0, 0, 0), |b| (b.x0, b.y0, b.x1, b.y1));
    let width = x1 - x0 + 2 * MARGIN;
    let height = y1 - y0 + 2 * MARGIN;
    // Layout y grows upward, SVG y grows downward.
    let px = |x: i64| x - x0 + MARGIN;
    let py = |y: i64| y1 - y + MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    s.push_str("<style>\n");
    s.push_str(".group{fill:none;stroke:#555;stroke-width:2}\n");
    s.push_str(".conflict{stroke:#e00;stroke-width:3}\n");
    s.push_str(".hotspot{fill:none;stroke:#f0a;stroke-width:2;stroke-dasharray:6 3}\n");
    for (m, color) in PALETTE.iter().enumerate() {
        let _ = writeln!(s, ".mask-{m}{{fill:{color}}}");
    }
    s.push_str("</style>\n");

    let pad = half + 4;
    for g in &decomposition.groups {
        let pts = g.vias.iter().filter_map(|&v| layout.via(v));
        let (mut gx0, mut gy0, mut gx1, mut gy1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for v in pts {
            gx0 = gx0.min(v.x);
            gy0 = gy0.min(v.y);
            gx1 = gx1.max(v.x);
            gy1 = gy1.max(v.y);
        }
        if gx0 > gx1 {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<rect class="group" data-group="{}" x="{}" y="{}" width="{}" height="{}" rx="{}"/>"#,
            g.id,
            px(gx0) - pad,
            py(gy1) - pad,
            gx1 - gx0 + 2 * pad,
            gy1 - gy0 + 2 * pad,
            pad
        );
    }

    let mask = decomposition.dense_assignment(layout.len());
    for v in layout.vias() {
        let class = match mask[v.id] {
            Some((_, m)) => format!("mask-{m}"),
            None => "unassigned".to_string(),
        };
        let _ = writeln!(
            s,
            r#"<rect class="via {class}" data-via="{}" x="{}" y="{}" width="{}" height="{}"/>"#,
            v.id,
            px(v.x) - half,
            py(v.y) - half,
            2 * half,
            2 * half
        );
    }

    for c in &report.conflicts {
        let (Some(a), Some(b)) = (layout.via(c.a), layout.via(c.b)) else {
            continue;
        };
        let _ = writeln!(
            s,
            r#"<line class="conflict" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            px(a.x),
            py(a.y),
            px(b.x),
            py(b.y)
        );
    }

    for h in &report.hotspots {
        let (w, hgt) = library
            .patterns
            .iter()
            .find(|p| p.id == h.pattern_id)
            .map_or((0, 0), |p| (p.window.w, p.window.h));
        let _ = writeln!(
            s,
            r#"<rect class="hotspot" data-pattern="{}" x="{}" y="{}" width="{}" height="{}"/>"#,
            escape(&h.pattern_id),
            px(h.origin.x) - pad,
            py(h.origin.y + hgt) - pad,
            w + 2 * pad,
            hgt + 2 * pad
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn write_svg(
    path: &Path,
    layout: &Layout,
    decomposition: &Decomposition,
    report: &ViolationReport,
    library: &HotspotLibrary,
) -> Result<()> {
    fs::write(path, render_svg(layout, decomposition, report, library))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{DecompositionMeta, Group};
    use crate::tech::TechParams;
    use crate::verify::verify;

    fn count(svg: &str, class: &str) -> usize {
        svg.matches(&format!("class=\"{class}")).count()
    }

    #[test]
    fn single_via_single_square() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(10, 10)]).unwrap();
        let d = Decomposition {
            groups: vec![Group {
                id: 0,
                vias: vec![0],
                mask: 0,
            }],
            meta: DecompositionMeta::default(),
        };
        let lib = HotspotLibrary::empty(&tech);
        let report = verify(&layout, &d, &tech, &lib).unwrap();
        let svg = render_svg(&layout, &d, &report, &lib);
        assert_eq!(svg.matches("class=\"via mask-0\"").count(), 1);
        assert_eq!(count(&svg, "via"), 1);
    }

    #[test]
    fn one_conflict_one_line() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(0, 0), (60, 0), (300, 0)]).unwrap();
        let d = Decomposition {
            groups: (0..3)
                .map(|v| Group {
                    id: v,
                    vias: vec![v],
                    mask: 0,
                })
                .collect(),
            meta: DecompositionMeta::default(),
        };
        let lib = HotspotLibrary::empty(&tech);
        let report = verify(&layout, &d, &tech, &lib).unwrap();
        let svg = render_svg(&layout, &d, &report, &lib);
        assert_eq!(count(&svg, "conflict"), 1);
        assert_eq!(count(&svg, "group"), 3);
        assert_eq!(svg, render_svg(&layout, &d, &report, &lib));
    }
}
