//! Ground-truth audit of a decomposition against the layout geometry and
//! the hotspot library. Nothing here reads the solver's graph.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::hotspot::HotspotLibrary;
use crate::layout::{Layout, SpatialIndex, ViaId};
use crate::matcher::Origin;
use crate::tech::TechParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictViolation {
    pub a: ViaId,
    pub b: ViaId,
    pub distance: f64,
    pub mask: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotspotViolation {
    pub pattern_id: String,
    pub origin: Origin,
    pub mask: usize,
    /// Constituent vias in pattern offset order.
    pub vias: Vec<ViaId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub conflicts: Vec<ConflictViolation>,
    pub hotspots: Vec<HotspotViolation>,
    pub n_conflicts: usize,
    pub n_hotspots: usize,
    pub n_violations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

impl ViolationReport {
    pub fn new(conflicts: Vec<ConflictViolation>, hotspots: Vec<HotspotViolation>) -> Self {
        ViolationReport {
            n_conflicts: conflicts.len(),
            n_hotspots: hotspots.len(),
            n_violations: conflicts.len() + hotspots.len(),
            conflicts,
            hotspots,
            mode: None,
        }
    }

    pub fn with_mode(mut self, mode: impl Into<String>) -> Self {
        self.mode = Some(mode.into());
        self
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Human-readable listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(mode) = &self.mode {
            let _ = writeln!(out, "mode: {mode}");
        }
        let _ = writeln!(
            out,
            "violations: {} (conflicts {}, hotspots {})",
            self.n_violations, self.n_conflicts, self.n_hotspots
        );
        for c in &self.conflicts {
            let _ = writeln!(
                out,
                "  conflict {} - {} at {:.1} nm on mask {}",
                c.a, c.b, c.distance, c.mask
            );
        }
        for h in &self.hotspots {
            let _ = writeln!(
                out,
                "  hotspot {} at ({}, {}) on mask {} vias {:?}",
                h.pattern_id, h.origin.x, h.origin.y, h.mask, h.vias
            );
        }
        out
    }
}

/// Dense via -> (group index, mask), checked to be a partition of all vias
/// with masks in range.
fn assignment(
    layout: &Layout,
    decomposition: &Decomposition,
    tech: &TechParams,
) -> Result<Vec<(usize, usize)>> {
    let n = layout.len();
    let mut out: Vec<Option<(usize, usize)>> = vec![None; n];
    for (gi, g) in decomposition.groups.iter().enumerate() {
        if g.vias.is_empty() {
            return Err(Error::InvalidDecomposition(format!(
                "group {} is empty",
                g.id
            )));
        }
        if g.mask >= tech.num_masks {
            return Err(Error::InvalidDecomposition(format!(
                "group {} uses mask {} but only {} masks exist",
                g.id, g.mask, tech.num_masks
            )));
        }
        for &v in &g.vias {
            if v >= n {
                return Err(Error::InvalidDecomposition(format!(
                    "group {} names unknown via {v}",
                    g.id
                )));
            }
            if out[v].replace((gi, g.mask)).is_some() {
                return Err(Error::InvalidDecomposition(format!(
                    "via {v} is in more than one group"
                )));
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(v, a)| {
            a.ok_or_else(|| Error::InvalidDecomposition(format!("via {v} is not assigned")))
        })
        .collect()
}

/// A multi-via group is printable as one template when its vias are
/// collinear, at most `max_g` of them, consecutive gaps are legal, and no
/// other via sits between two consecutive members.
fn is_legal_template(
    layout: &Layout,
    at: &HashMap<(i64, i64), ViaId>,
    vias: &[ViaId],
    tech: &TechParams,
) -> bool {
    if vias.len() < 2 {
        return true;
    }
    if vias.len() > tech.max_g {
        return false;
    }
    let mut pts: Vec<(i64, i64)> = vias
        .iter()
        .map(|&v| (layout.vias()[v].x, layout.vias()[v].y))
        .collect();
    pts.sort_unstable();
    let vertical = pts.iter().all(|p| p.0 == pts[0].0);
    let horizontal = pts.iter().all(|p| p.1 == pts[0].1);
    if !vertical && !horizontal {
        return false;
    }
    pts.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        let gap = (b.0 - a.0) + (b.1 - a.1);
        tech.is_group_gap(gap)
            && (1..gap).all(|s| {
                let p = if vertical {
                    (a.0, a.1 + s)
                } else {
                    (a.0 + s, a.1)
                };
                !at.contains_key(&p)
            })
    })
}

/// Rejects decompositions that are not a partition of the layout into legal
/// templates with in-range masks.
pub fn check_decomposition(
    layout: &Layout,
    decomposition: &Decomposition,
    tech: &TechParams,
) -> Result<()> {
    assignment(layout, decomposition, tech)?;
    let at = coordinate_map(layout);
    for g in &decomposition.groups {
        if !is_legal_template(layout, &at, &g.vias, tech) {
            return Err(Error::InvalidDecomposition(format!(
                "group {} {:?} is not a legal template",
                g.id, g.vias
            )));
        }
    }
    Ok(())
}

fn coordinate_map(layout: &Layout) -> HashMap<(i64, i64), ViaId> {
    layout.vias().iter().map(|v| ((v.x, v.y), v.id)).collect()
}

/// Same-mask pairs closer than the single-mask pitch that are not in one
/// group, sorted by `(a, b)`.
pub fn count_conflicts(
    layout: &Layout,
    decomposition: &Decomposition,
    tech: &TechParams,
) -> Result<Vec<ConflictViolation>> {
    let assign = assignment(layout, decomposition, tech)?;
    let index = SpatialIndex::new(layout, tech.min_pitch_same_mask);
    Ok(index
        .pairs_within(tech.same_mask_sq())
        .into_iter()
        .filter(|&(a, b)| assign[a].1 == assign[b].1 && assign[a].0 != assign[b].0)
        .map(|(a, b)| ConflictViolation {
            a,
            b,
            distance: (layout.dist_sq(a, b) as f64).sqrt(),
            mask: assign[a].1,
        })
        .collect())
}

/// Every library pattern placement whose constituents share one mask, whose
/// other window vias avoid it, and whose segments and nodes are exactly the
/// decomposition's groups. Sorted by pattern order, then origin.
pub fn find_realized_hotspots(
    layout: &Layout,
    decomposition: &Decomposition,
    library: &HotspotLibrary,
) -> Result<Vec<HotspotViolation>> {
    let assign = assignment(layout, decomposition, &library.tech)?;
    let at = coordinate_map(layout);
    let cell = library
        .patterns
        .iter()
        .map(|p| p.window.w.max(p.window.h))
        .max()
        .unwrap_or(1)
        .max(library.tech.min_pitch_same_mask);
    let index = SpatialIndex::new(layout, cell);
    let group_size = |v: ViaId| decomposition.groups[assign[v].0].vias.len();

    let mut found: Vec<(usize, HotspotViolation)> = library
        .patterns
        .par_iter()
        .enumerate()
        .flat_map_iter(|(pi, pattern)| {
            let at = &at;
            let assign = &assign;
            let index = &index;
            let anchor = pattern.offsets[0];
            layout.vias().iter().filter_map(move |v| {
                let origin = Origin {
                    x: v.x - anchor.dx,
                    y: v.y - anchor.dy,
                };
                let vias = pattern
                    .offsets
                    .iter()
                    .map(|o| at.get(&(origin.x + o.dx, origin.y + o.dy)).copied())
                    .collect::<Option<Vec<ViaId>>>()?;
                let mask = assign[vias[0]].1;
                if vias.iter().any(|&c| assign[c].1 != mask) {
                    return None;
                }
                for s in &pattern.segments {
                    let g = assign[vias[s[0]]].0;
                    if group_size(vias[s[0]]) != s.len()
                        || s.iter().any(|&i| assign[vias[i]].0 != g)
                    {
                        return None;
                    }
                }
                if pattern.nodes.iter().any(|&i| group_size(vias[i]) != 1) {
                    return None;
                }
                let others_clear = index
                    .in_rect(
                        origin.x,
                        origin.y,
                        origin.x + pattern.window.w,
                        origin.y + pattern.window.h,
                    )
                    .into_iter()
                    .filter(|u| !vias.contains(u))
                    .all(|u| assign[u].1 != mask);
                others_clear.then(|| {
                    (
                        pi,
                        HotspotViolation {
                            pattern_id: pattern.id.clone(),
                            origin,
                            mask,
                            vias,
                        },
                    )
                })
            })
        })
        .collect();
    found.sort_by_key(|(pi, h)| (*pi, h.origin));
    found.dedup_by_key(|(pi, h)| (*pi, h.origin));
    Ok(found.into_iter().map(|(_, h)| h).collect())
}

/// Full audit: unresolved conflicts plus realized hotspots. Fails if the
/// decomposition does not cover the layout with legal templates.
pub fn verify(
    layout: &Layout,
    decomposition: &Decomposition,
    tech: &TechParams,
    library: &HotspotLibrary,
) -> Result<ViolationReport> {
    check_decomposition(layout, decomposition, tech)?;
    let conflicts = count_conflicts(layout, decomposition, tech)?;
    let hotspots = find_realized_hotspots(layout, decomposition, library)?;
    Ok(ViolationReport::new(conflicts, hotspots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{DecompositionMeta, Group};
    use crate::fixtures;

    fn decomp(groups: &[(&[ViaId], usize)]) -> Decomposition {
        Decomposition {
            groups: groups
                .iter()
                .enumerate()
                .map(|(id, (vias, mask))| Group {
                    id,
                    vias: vias.to_vec(),
                    mask: *mask,
                })
                .collect(),
            meta: DecompositionMeta::default(),
        }
    }

    #[test]
    fn close_pair_on_one_mask_is_a_conflict() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(0, 0), (60, 0)]).unwrap();
        let c = count_conflicts(&layout, &decomp(&[(&[0], 0), (&[1], 0)]), &tech).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].a, c[0].b), (0, 1));
        assert!((c[0].distance - 60.0).abs() < 1e-9);
        assert!(
            count_conflicts(&layout, &decomp(&[(&[0], 0), (&[1], 1)]), &tech)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn grouping_resolves_conflict() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(0, 0), (40, 0)]).unwrap();
        let d = decomp(&[(&[0, 1], 0)]);
        assert!(count_conflicts(&layout, &d, &tech).unwrap().is_empty());
        check_decomposition(&layout, &d, &tech).unwrap();
    }

    #[test]
    fn pitch_boundary_is_exclusive() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(0, 0), (75, 0)]).unwrap();
        assert!(
            count_conflicts(&layout, &decomp(&[(&[0], 0), (&[1], 0)]), &tech)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn micro_realized_only_with_c_elsewhere() {
        let (graph, lib) = fixtures::micro();
        let layout = graph.layout();
        // a=0, b=1, c=2, d=3
        let realized = decomp(&[(&[0, 1], 0), (&[2], 1), (&[3], 0)]);
        let hs = find_realized_hotspots(layout, &realized, &lib).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs[0].vias, vec![0, 1, 3]);
        assert_eq!(hs[0].mask, 0);

        let c_same = decomp(&[(&[0, 1], 0), (&[2], 0), (&[3], 0)]);
        assert!(find_realized_hotspots(layout, &c_same, &lib)
            .unwrap()
            .is_empty());

        let ungrouped = decomp(&[(&[0], 0), (&[1], 0), (&[2], 1), (&[3], 0)]);
        assert!(find_realized_hotspots(layout, &ungrouped, &lib)
            .unwrap()
            .is_empty());

        let cd = decomp(&[(&[0, 1], 0), (&[2, 3], 0)]);
        assert!(find_realized_hotspots(layout, &cd, &lib)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn report_totals_add_up() {
        let (graph, lib) = fixtures::micro();
        let layout = graph.layout();
        let d = decomp(&[(&[0, 1], 0), (&[2], 1), (&[3], 0)]);
        let r = verify(layout, &d, graph.tech(), &lib).unwrap();
        assert_eq!(r.n_violations, r.n_conflicts + r.n_hotspots);
        assert_eq!((r.n_conflicts, r.n_hotspots), (0, 1));
        let back = ViolationReport::from_json_str(&r.to_json_string()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("violations: 1"));
    }

    #[test]
    fn clean_decomposition_reports_zero() {
        let (graph, lib) = fixtures::micro();
        let d = decomp(&[(&[0, 1], 0), (&[2, 3], 1)]);
        let r = verify(graph.layout(), &d, graph.tech(), &lib).unwrap();
        assert_eq!((r.n_conflicts, r.n_hotspots, r.n_violations), (0, 0, 0));
    }

    #[test]
    fn incomplete_or_illegal_decompositions_are_rejected() {
        let tech = TechParams::default();
        let layout = Layout::from_points([(0, 0), (40, 0), (200, 0)]).unwrap();
        assert!(matches!(
            count_conflicts(&layout, &decomp(&[(&[0, 1], 0)]), &tech),
            Err(Error::InvalidDecomposition(_))
        ));
        assert!(check_decomposition(&layout, &decomp(&[(&[0, 1, 2], 0)]), &tech).is_err());
        assert!(check_decomposition(&layout, &decomp(&[(&[0, 2], 0), (&[1], 0)]), &tech).is_err());
        assert!(
            check_decomposition(&layout, &decomp(&[(&[0], 3), (&[1], 0), (&[2], 0)]), &tech)
                .is_err()
        );
        assert!(check_decomposition(
            &layout,
            &decomp(&[(&[0], 0), (&[0, 1], 0), (&[2], 0)]),
            &tech
        )
        .is_err());
    }

    #[test]
    fn template_may_not_skip_a_via() {
        let tech = TechParams::default().with_max_g(3);
        let layout = Layout::from_points([(0, 0), (20, 0), (40, 0)]).unwrap();
        assert!(check_decomposition(&layout, &decomp(&[(&[0, 2], 0), (&[1], 1)]), &tech).is_err());
        check_decomposition(&layout, &decomp(&[(&[0, 1, 2], 0)]), &tech).unwrap();
    }
}
