//! Pattern occurrences by scanning every translation.

use std::collections::HashMap;

use dsa_hotspot::{HotspotLibrary, Layout, ViaId};

use crate::geometry::is_legal_template;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleMatch {
    pub pattern_index: usize,
    pub origin: (i64, i64),
    /// In pattern offset order.
    pub constituents: Vec<ViaId>,
    pub non_constituents: Vec<ViaId>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

const MAX_TRANSLATIONS: u64 = 200_000_000;

/// Every placement of every pattern: all offsets land on vias. With
/// `templates_only`, placements whose segments are not legal templates are
/// left out.
pub(crate) fn placements(
    layout: &Layout,
    library: &HotspotLibrary,
    templates_only: bool,
) -> Vec<OracleMatch> {
    let Some(bbox) = layout.bbox() else {
        return Vec::new();
    };
    let at: HashMap<(i64, i64), ViaId> = layout.vias().iter().map(|v| ((v.x, v.y), v.id)).collect();
    // Any matching translation is a coordinate minus an offset, so stepping
    // by the gcd of all coordinates and offsets visits every candidate.
    let mut gx = 0;
    let mut gy = 0;
    for v in layout.vias() {
        gx = gcd(gx, v.x);
        gy = gcd(gy, v.y);
    }
    for p in &library.patterns {
        for o in &p.offsets {
            gx = gcd(gx, o.dx);
            gy = gcd(gy, o.dy);
        }
    }
    let (gx, gy) = (gx.max(1), gy.max(1));
    let floor = |v: i64, g: i64| v.div_euclid(g) * g;

    let mut out = Vec::new();
    for (pi, p) in library.patterns.iter().enumerate() {
        let max_dx = p.offsets.iter().map(|o| o.dx).max().unwrap_or(0);
        let max_dy = p.offsets.iter().map(|o| o.dy).max().unwrap_or(0);
        let x0 = floor(bbox.x0 - max_dx, gx);
        let y0 = floor(bbox.y0 - max_dy, gy);
        let steps = ((bbox.x1 - x0) / gx + 1) as u64 * ((bbox.y1 - y0) / gy + 1) as u64;
        assert!(
            steps <= MAX_TRANSLATIONS,
            "oracle_match: {steps} translations is too many"
        );
        let mut ty = y0;
        while ty <= bbox.y1 {
            let mut tx = x0;
            while tx <= bbox.x1 {
                let hit: Option<Vec<ViaId>> = p
                    .offsets
                    .iter()
                    .map(|o| at.get(&(tx + o.dx, ty + o.dy)).copied())
                    .collect();
                if let Some(constituents) = hit {
                    let legal = !templates_only
                        || p.segments.iter().all(|s| {
                            let ids: Vec<ViaId> = s.iter().map(|&i| constituents[i]).collect();
                            is_legal_template(layout, &ids, &library.tech)
                        });
                    if legal {
                        let non_constituents = layout
                            .vias()
                            .iter()
                            .filter(|v| {
                                v.x >= tx
                                    && v.x <= tx + p.window.w
                                    && v.y >= ty
                                    && v.y <= ty + p.window.h
                            })
                            .map(|v| v.id)
                            .filter(|id| !constituents.contains(id))
                            .collect();
                        out.push(OracleMatch {
                            pattern_index: pi,
                            origin: (tx, ty),
                            constituents,
                            non_constituents,
                        });
                    }
                }
                tx += gx;
            }
            ty += gy;
        }
    }
    out.sort();
    out
}

/// Potential hotspots: placements whose segments are printable templates.
/// Sorted by pattern index, then origin.
pub fn oracle_match(layout: &Layout, library: &HotspotLibrary) -> Vec<OracleMatch> {
    placements(layout, library, true)
}

/// `(pattern index, origin, mask)` for every placement realized by the
/// assignment `groups` (via lists with their mask), straight from the
/// definition: constituents on one mask, other window vias off it, each
/// segment exactly one group, each node alone in its group.
pub fn realized_hotspots(
    layout: &Layout,
    library: &HotspotLibrary,
    groups: &[(Vec<ViaId>, usize)],
) -> Vec<(usize, (i64, i64), usize)> {
    let group_of = |v: ViaId| {
        groups
            .iter()
            .position(|(g, _)| g.contains(&v))
            .expect("via is assigned")
    };
    let mask_of = |v: ViaId| groups[group_of(v)].1;
    let mut out = Vec::new();
    for m in placements(layout, library, false) {
        let p = &library.patterns[m.pattern_index];
        let mask = mask_of(m.constituents[0]);
        if !m.constituents.iter().all(|&c| mask_of(c) == mask) {
            continue;
        }
        if m.non_constituents.iter().any(|&u| mask_of(u) == mask) {
            continue;
        }
        let segments_ok = p.segments.iter().all(|s| {
            let mut ids: Vec<ViaId> = s.iter().map(|&i| m.constituents[i]).collect();
            ids.sort_unstable();
            let mut g = groups[group_of(ids[0])].0.clone();
            g.sort_unstable();
            g == ids
        });
        let nodes_ok = p
            .nodes
            .iter()
            .all(|&i| groups[group_of(m.constituents[i])].0.len() == 1);
        if segments_ok && nodes_ok {
            out.push((m.pattern_index, m.origin, mask));
        }
    }
    out
}
