//! Potential-hotspot detection by exact translation matching, and the
//! eliminator candidates (added conflicts / forced groups) that kill them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{GroupEdge, LayoutGraph};
use crate::hotspot::{HotspotLibrary, HotspotPattern, Window};
use crate::layout::{SpatialIndex, ViaId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub x: i64,
    pub y: i64,
}

/// A window where a library pattern can materialize depending on the
/// grouping and coloring chosen later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialHotspot {
    pub id: usize,
    pub pattern_index: usize,
    pub pattern_id: String,
    pub origin: Origin,
    pub window: Window,
    /// `constituents[i]` sits at pattern offset `i`.
    pub constituents: Vec<ViaId>,
    /// Other vias inside the closed window rectangle, ascending.
    pub non_constituents: Vec<ViaId>,
    /// Pattern segments translated to via ids (ascending within each).
    pub segments: Vec<Vec<ViaId>>,
    pub nodes: Vec<ViaId>,
}

impl PotentialHotspot {
    /// Constituents and non-constituents together.
    pub fn window_vias(&self) -> impl Iterator<Item = ViaId> + '_ {
        self.constituents
            .iter()
            .chain(&self.non_constituents)
            .copied()
    }

    pub fn is_constituent(&self, v: ViaId) -> bool {
        self.constituents.contains(&v)
    }

    pub fn is_non_constituent(&self, v: ViaId) -> bool {
        self.non_constituents.binary_search(&v).is_ok()
    }
}

/// Translated pattern structure for a match: `(constituents, segments, nodes)`.
type Placement = (Vec<ViaId>, Vec<Vec<ViaId>>, Vec<ViaId>);

fn place(
    pattern: &HotspotPattern,
    origin: Origin,
    at: &HashMap<(i64, i64), ViaId>,
) -> Option<Placement> {
    let constituents = pattern
        .offsets
        .iter()
        .map(|o| at.get(&(origin.x + o.dx, origin.y + o.dy)).copied())
        .collect::<Option<Vec<_>>>()?;
    let segments = pattern
        .segments
        .iter()
        .map(|s| {
            let mut ids: Vec<ViaId> = s.iter().map(|&i| constituents[i]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    let mut nodes: Vec<ViaId> = pattern.nodes.iter().map(|&i| constituents[i]).collect();
    nodes.sort_unstable();
    Some((constituents, segments, nodes))
}

/// Slides every pattern over the layout, anchoring its first offset on each
/// via. Matches whose segments are not templates in `graph` are dropped.
pub fn find_potential_hotspots(
    graph: &LayoutGraph,
    library: &HotspotLibrary,
) -> Vec<PotentialHotspot> {
    let layout = graph.layout();
    if layout.is_empty() || library.is_empty() {
        return Vec::new();
    }
    let at: HashMap<(i64, i64), ViaId> = layout.vias().iter().map(|v| ((v.x, v.y), v.id)).collect();
    let index = SpatialIndex::new(layout, graph.tech().min_pitch_same_mask);

    let mut found: Vec<PotentialHotspot> = library
        .patterns
        .par_iter()
        .enumerate()
        .flat_map_iter(|(pi, pattern)| {
            let at = &at;
            let index = &index;
            let anchor = pattern.offsets[0];
            layout.vias().iter().filter_map(move |v| {
                let origin = Origin {
                    x: v.x - anchor.dx,
                    y: v.y - anchor.dy,
                };
                let (constituents, segments, nodes) = place(pattern, origin, at)?;
                if !segments.iter().all(|s| graph.is_group_edge(s)) {
                    return None;
                }
                let non_constituents = index
                    .in_rect(
                        origin.x,
                        origin.y,
                        origin.x + pattern.window.w,
                        origin.y + pattern.window.h,
                    )
                    .into_iter()
                    .filter(|u| !constituents.contains(u))
                    .collect();
                Some(PotentialHotspot {
                    id: 0,
                    pattern_index: pi,
                    pattern_id: pattern.id.clone(),
                    origin,
                    window: pattern.window,
                    constituents,
                    non_constituents,
                    segments,
                    nodes,
                })
            })
        })
        .collect();

    found.sort_by_key(|h| (h.pattern_index, h.origin));
    found.dedup_by_key(|h| (h.pattern_index, h.origin));
    for (i, h) in found.iter_mut().enumerate() {
        h.id = i;
    }
    found
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EliminatorKind {
    /// Add a conflict edge between two non-groupable constituents.
    Conflict { a: ViaId, b: ViaId },
    /// Force a template joining a constituent with a non-constituent.
    Affinity { group: GroupEdge },
}

impl EliminatorKind {
    /// Ordering key: conflicts before affinities, then ascending via ids.
    pub fn canonical_key(&self) -> (u8, Vec<ViaId>) {
        match self {
            EliminatorKind::Conflict { a, b } => (0, vec![*a.min(b), *a.max(b)]),
            EliminatorKind::Affinity { group } => (1, group.key()),
        }
    }

    pub fn vias(&self) -> Vec<ViaId> {
        self.canonical_key().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminatorState {
    Live,
    Chosen,
    Invalidated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eliminator {
    pub id: usize,
    pub kind: EliminatorKind,
    /// Potential-hotspot ids, ascending.
    pub covers: Vec<usize>,
    pub state: EliminatorState,
}

/// One candidate per distinct conflict pair / template, with the merged set
/// of hotspots it eliminates. Ids follow the canonical key order.
pub fn enumerate_eliminators(phs: &[PotentialHotspot], graph: &LayoutGraph) -> Vec<Eliminator> {
    let mut cands: BTreeMap<(u8, Vec<ViaId>), (EliminatorKind, BTreeSet<usize>)> = BTreeMap::new();
    let mut add = |kind: EliminatorKind, h: usize| {
        cands
            .entry(kind.canonical_key())
            .or_insert_with(|| (kind, BTreeSet::new()))
            .1
            .insert(h);
    };
    for h in phs {
        let mut sorted = h.constituents.clone();
        sorted.sort_unstable();
        for (i, &a) in sorted.iter().enumerate() {
            for &b in &sorted[i + 1..] {
                let groupable = graph.is_groupable(&[a, b]).unwrap_or(true);
                if !groupable && !graph.has_conflict(a, b) {
                    add(EliminatorKind::Conflict { a, b }, h.id);
                }
            }
        }
        for &c in &sorted {
            for &e in graph.group_edges_of(c) {
                let g = &graph.group_edges()[e];
                if g.vias().iter().any(|&u| h.is_non_constituent(u)) {
                    add(EliminatorKind::Affinity { group: g.clone() }, h.id);
                }
            }
        }
    }
    cands
        .into_values()
        .enumerate()
        .map(|(id, (kind, covers))| Eliminator {
            id,
            kind,
            covers: covers.into_iter().collect(),
            state: EliminatorState::Live,
        })
        .collect()
}

/// JSON view of detection output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDump {
    pub hotspots: Vec<PotentialHotspot>,
    pub candidates: Vec<Eliminator>,
}
