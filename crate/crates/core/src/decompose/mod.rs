//! Simultaneous DSA grouping and k-mask assignment, one connected component
//! at a time.
//!
//! Small components are solved exactly by branch and bound; larger ones fall
//! back to a deterministic greedy grouping + coloring with local recoloring.
//! The objective of a component is the number of unresolved conflict edges
//! (native or added) plus, in hotspot-aware mode, the number of realized
//! hotspots whose whole window lies in the component. Hotspot-aware solves
//! first merge components that share a potential-hotspot window, so the sum
//! over solved units is the global objective.

mod exact;
mod heuristic;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LayoutGraph, UnionFind};
use crate::hotspot::HotspotLibrary;
use crate::layout::ViaId;
use crate::matcher::{find_potential_hotspots, PotentialHotspot};

pub const DEFAULT_EXACT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveMode {
    pub hotspot_aware: bool,
    pub exact_limit: usize,
}

impl SolveMode {
    pub fn aware() -> Self {
        SolveMode {
            hotspot_aware: true,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }

    pub fn unaware() -> Self {
        SolveMode {
            hotspot_aware: false,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }

    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: usize,
    /// Ascending via ids.
    pub vias: Vec<ViaId>,
    pub mask: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionMeta {
    pub exact_components: usize,
    pub fallback_components: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub groups: Vec<Group>,
    pub meta: DecompositionMeta,
}

impl Decomposition {
    /// via -> index into `groups`.
    pub fn via_to_group(&self) -> HashMap<ViaId, usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.vias.iter().map(move |&v| (v, i)))
            .collect()
    }

    /// Dense via -> `(group index, mask)` over `0..n`, `None` where absent.
    pub fn dense_assignment(&self, n: usize) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; n];
        for (i, g) in self.groups.iter().enumerate() {
            for &v in &g.vias {
                if v < n {
                    out[v] = Some((i, g.mask));
                }
            }
        }
        out
    }

    pub fn mask_of(&self, v: ViaId) -> Option<usize> {
        self.groups
            .iter()
            .find(|g| g.vias.contains(&v))
            .map(|g| g.mask)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Outcome for one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSolution {
    /// `(ascending via ids, mask)`, ordered by smallest via.
    pub groups: Vec<(Vec<ViaId>, usize)>,
    pub objective: usize,
    pub exact: bool,
}

/// A hotspot restricted to one component, in local indices.
#[derive(Debug, Clone)]
pub(crate) struct LocalHotspot {
    pub constituents: Vec<usize>,
    pub non_constituents: Vec<usize>,
    pub segments: Vec<Vec<usize>>,
    pub nodes: Vec<usize>,
}

/// A component in local indices `0..n` (ascending global id order).
#[derive(Debug, Clone)]
pub(crate) struct ComponentProblem {
    pub vias: Vec<ViaId>,
    pub k: usize,
    pub conflicts: Vec<Vec<usize>>,
    /// Candidate templates (sorted local ids).
    pub edges: Vec<Vec<usize>>,
    pub edges_of: Vec<Vec<usize>>,
    pub forced: Vec<Vec<usize>>,
    pub forced_of: Vec<Option<usize>>,
    pub hotspots: Vec<LocalHotspot>,
    /// local via -> hotspots whose window contains it
    pub hotspots_of: Vec<Vec<usize>>,
}

/// Group/mask assignment in local indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Assignment {
    pub group_of: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    pub mask: Vec<usize>,
}

impl Assignment {
    pub fn via_mask(&self, v: usize) -> usize {
        self.mask[self.group_of[v]]
    }
}

impl ComponentProblem {
    pub fn new(graph: &LayoutGraph, vias: &[ViaId], phs: &[&PotentialHotspot]) -> Self {
        let mut vias = vias.to_vec();
        vias.sort_unstable();
        let local: HashMap<ViaId, usize> = vias.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = vias.len();

        let conflicts: Vec<Vec<usize>> = vias
            .iter()
            .map(|&v| {
                let mut adj: Vec<usize> = graph
                    .conflict_neighbors(v)
                    .iter()
                    .filter_map(|u| local.get(u).copied())
                    .collect();
                adj.sort_unstable();
                adj.dedup();
                adj
            })
            .collect();

        let to_local = |ids: &[ViaId]| -> Option<Vec<usize>> {
            let mut out = ids
                .iter()
                .map(|v| local.get(v).copied())
                .collect::<Option<Vec<_>>>()?;
            out.sort_unstable();
            Some(out)
        };

        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for &v in &vias {
            for &e in graph.group_edges_of(v) {
                if seen.insert(e) {
                    if let Some(l) = to_local(graph.group_edges()[e].vias()) {
                        edges.push(l);
                    }
                }
            }
        }
        edges.sort();
        let mut edges_of = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            for &v in e {
                edges_of[v].push(i);
            }
        }

        let mut forced = Vec::new();
        let mut forced_of = vec![None; n];
        for &v in &vias {
            let Some(g) = graph.forced_group_of(v) else {
                continue;
            };
            if g.key()[0] != v {
                continue;
            }
            if let Some(l) = to_local(g.vias()) {
                for &u in &l {
                    forced_of[u] = Some(forced.len());
                }
                forced.push(l);
            }
        }

        let mut hotspots = Vec::new();
        let mut hotspots_of = vec![Vec::new(); n];
        for h in phs {
            let (Some(constituents), Some(non_constituents)) =
                (to_local(&h.constituents), to_local(&h.non_constituents))
            else {
                continue;
            };
            let segments = h
                .segments
                .iter()
                .filter_map(|s| to_local(s))
                .collect::<Vec<_>>();
            let nodes = to_local(&h.nodes).expect("nodes are constituents");
            let idx = hotspots.len();
            for &v in constituents.iter().chain(&non_constituents) {
                hotspots_of[v].push(idx);
            }
            hotspots.push(LocalHotspot {
                constituents,
                non_constituents,
                segments,
                nodes,
            });
        }

        ComponentProblem {
            vias,
            k: graph.tech().num_masks,
            conflicts,
            edges,
            edges_of,
            forced,
            forced_of,
            hotspots,
            hotspots_of,
        }
    }

    pub fn len(&self) -> usize {
        self.vias.len()
    }

    pub fn is_realized(&self, h: &LocalHotspot, a: &Assignment) -> bool {
        let m = a.via_mask(h.constituents[0]);
        h.constituents.iter().all(|&c| a.via_mask(c) == m)
            && h.non_constituents.iter().all(|&u| a.via_mask(u) != m)
            && h.segments.iter().all(|s| {
                let g = a.group_of[s[0]];
                a.groups[g].len() == s.len() && s.iter().all(|&v| a.group_of[v] == g)
            })
            && h.nodes.iter().all(|&v| a.groups[a.group_of[v]].len() == 1)
    }

    pub fn objective(&self, a: &Assignment, aware: bool) -> usize {
        let mut cost = 0;
        for (u, adj) in self.conflicts.iter().enumerate() {
            for &v in adj {
                if u < v && a.group_of[u] != a.group_of[v] && a.via_mask(u) == a.via_mask(v) {
                    cost += 1;
                }
            }
        }
        if aware {
            cost += self
                .hotspots
                .iter()
                .filter(|h| self.is_realized(h, a))
                .count();
        }
        cost
    }

    fn to_solution(&self, a: &Assignment, objective: usize, exact: bool) -> ComponentSolution {
        let mut groups: Vec<(Vec<ViaId>, usize)> = a
            .groups
            .iter()
            .zip(&a.mask)
            .filter(|(g, _)| !g.is_empty())
            .map(|(g, &m)| {
                let mut ids: Vec<ViaId> = g.iter().map(|&l| self.vias[l]).collect();
                ids.sort_unstable();
                (ids, m)
            })
            .collect();
        groups.sort();
        ComponentSolution {
            groups,
            objective,
            exact,
        }
    }
}

/// Units solved independently, with the hotspots scored inside each.
///
/// Without hotspots these are the graph components. In hotspot-aware mode,
/// components that share a potential-hotspot window are merged so that every
/// window is scored by exactly one unit.
pub fn solve_units<'a>(
    graph: &LayoutGraph,
    phs: &'a [PotentialHotspot],
    hotspot_aware: bool,
) -> Vec<(Vec<ViaId>, Vec<&'a PotentialHotspot>)> {
    let comps = graph.components();
    if !hotspot_aware {
        return comps.iter().map(|c| (c.clone(), Vec::new())).collect();
    }
    let mut uf = UnionFind::new(comps.len());
    for h in phs {
        let c = graph.component_of(h.constituents[0]);
        for v in h.window_vias() {
            uf.union(c, graph.component_of(v));
        }
    }
    // Units are numbered by their first component, which is also their
    // smallest via since components are ordered that way.
    let mut unit_of_root = HashMap::new();
    let mut units: Vec<(Vec<ViaId>, Vec<&PotentialHotspot>)> = Vec::new();
    let mut unit_of_comp = vec![0; comps.len()];
    for (ci, comp) in comps.iter().enumerate() {
        let root = uf.find(ci);
        let u = *unit_of_root.entry(root).or_insert_with(|| {
            units.push((Vec::new(), Vec::new()));
            units.len() - 1
        });
        unit_of_comp[ci] = u;
        units[u].0.extend_from_slice(comp);
    }
    for (vias, _) in &mut units {
        vias.sort_unstable();
    }
    for h in phs {
        units[unit_of_comp[graph.component_of(h.constituents[0])]]
            .1
            .push(h);
    }
    units
}

/// Exact branch and bound for one component.
pub fn solve_component_exact(
    component: &[ViaId],
    graph: &LayoutGraph,
    phs: &[PotentialHotspot],
    mode: SolveMode,
) -> Result<ComponentSolution> {
    if component.len() > mode.exact_limit {
        return Err(Error::ComponentTooLarge {
            size: component.len(),
            limit: mode.exact_limit,
        });
    }
    let local = component_hotspots(component, phs);
    let p = ComponentProblem::new(graph, component, &local);
    check_forced(&p)?;
    let (a, obj) = exact::solve(&p, mode.hotspot_aware);
    Ok(p.to_solution(&a, obj, true))
}

/// Deterministic greedy grouping + coloring for one component.
pub fn solve_component_heuristic(
    component: &[ViaId],
    graph: &LayoutGraph,
    phs: &[PotentialHotspot],
    mode: SolveMode,
) -> Result<ComponentSolution> {
    let local = component_hotspots(component, phs);
    let p = ComponentProblem::new(graph, component, &local);
    check_forced(&p)?;
    let a = heuristic::solve(&p, mode.hotspot_aware);
    let obj = p.objective(&a, mode.hotspot_aware);
    Ok(p.to_solution(&a, obj, false))
}

/// Hotspots whose whole window lies inside `vias`.
fn component_hotspots<'a>(
    vias: &[ViaId],
    phs: &'a [PotentialHotspot],
) -> Vec<&'a PotentialHotspot> {
    let members: HashSet<ViaId> = vias.iter().copied().collect();
    phs.iter()
        .filter(|h| h.window_vias().all(|v| members.contains(&v)))
        .collect()
}

fn check_forced(p: &ComponentProblem) -> Result<()> {
    let mut owner = vec![None; p.len()];
    for (i, f) in p.forced.iter().enumerate() {
        for &v in f {
            if let Some(j) = owner[v].replace(i) {
                return Err(Error::Inconsistent(format!(
                    "forced groups {j} and {i} overlap at via {}",
                    p.vias[v]
                )));
            }
        }
    }
    Ok(())
}

/// Decomposes every component; potential hotspots are detected from
/// `library` when the mode is hotspot-aware.
pub fn decompose(
    graph: &LayoutGraph,
    library: &HotspotLibrary,
    mode: SolveMode,
) -> Result<Decomposition> {
    let phs = if mode.hotspot_aware {
        find_potential_hotspots(graph, library)
    } else {
        Vec::new()
    };
    decompose_with_hotspots(graph, &phs, mode)
}

/// Like [`decompose`] with precomputed potential hotspots.
pub fn decompose_with_hotspots(
    graph: &LayoutGraph,
    phs: &[PotentialHotspot],
    mode: SolveMode,
) -> Result<Decomposition> {
    if mode.exact_limit == 0 {
        return Err(Error::InvalidGenerator(
            "exact_limit must be at least 1".into(),
        ));
    }
    let units = solve_units(graph, phs, mode.hotspot_aware);
    let solutions = units
        .par_iter()
        .map(|(comp, local)| {
            let p = ComponentProblem::new(graph, comp, local);
            check_forced(&p)?;
            Ok(if comp.len() <= mode.exact_limit {
                let (a, obj) = exact::solve(&p, mode.hotspot_aware);
                p.to_solution(&a, obj, true)
            } else {
                let a = heuristic::solve(&p, mode.hotspot_aware);
                let obj = p.objective(&a, mode.hotspot_aware);
                p.to_solution(&a, obj, false)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_solutions(solutions))
}

/// Concatenates component solutions in component order, numbering groups.
pub fn merge_solutions(solutions: Vec<ComponentSolution>) -> Decomposition {
    let mut meta = DecompositionMeta::default();
    let mut groups = Vec::new();
    for s in solutions {
        if s.exact {
            meta.exact_components += 1;
        } else {
            meta.fallback_components += 1;
        }
        for (vias, mask) in s.groups {
            groups.push(Group {
                id: groups.len(),
                vias,
                mask,
            });
        }
    }
    Decomposition { groups, meta }
}

/// Solver objective over the vias present in `decomposition`: unresolved
/// conflict edges of `graph` inside that scope, plus (hotspot-aware) realized
/// hotspots whose window lies in the scope.
pub fn objective_value(
    decomposition: &Decomposition,
    graph: &LayoutGraph,
    phs: &[PotentialHotspot],
    mode: SolveMode,
) -> usize {
    let n = graph.layout().len();
    let assign = decomposition.dense_assignment(n);
    let mut cost = 0;
    for e in graph.conflict_edges() {
        if let (Some((ga, ma)), Some((gb, mb))) = (assign[e.a], assign[e.b]) {
            if ga != gb && ma == mb {
                cost += 1;
            }
        }
    }
    if mode.hotspot_aware {
        for h in phs {
            if h.window_vias().any(|v| assign[v].is_none()) {
                continue;
            }
            let m = assign[h.constituents[0]].map(|(_, m)| m);
            let size = |g: usize| decomposition.groups[g].vias.len();
            let realized = h
                .constituents
                .iter()
                .all(|&v| assign[v].map(|(_, m)| m) == m)
                && h.non_constituents
                    .iter()
                    .all(|&v| assign[v].map(|(_, m)| m) != m)
                && h.segments.iter().all(|s| {
                    let g = assign[s[0]].map(|(g, _)| g);
                    g.is_some_and(|g| size(g) == s.len())
                        && s.iter().all(|&v| assign[v].map(|(g, _)| g) == g)
                })
                && h.nodes
                    .iter()
                    .all(|&v| assign[v].is_some_and(|(g, _)| size(g) == 1));
            if realized {
                cost += 1;
            }
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fixtures::{micro, micro_with};
    use crate::graph::build_graph;
    use crate::layout::Layout;
    use crate::tech::TechParams;

    fn graph(points: &[(i64, i64)], tech: &TechParams) -> LayoutGraph {
        build_graph(
            Arc::new(Layout::from_points(points.iter().copied()).unwrap()),
            tech,
        )
        .unwrap()
    }

    #[test]
    fn sixty_nm_pair_splits_masks() {
        let tech = TechParams::default().with_masks(2);
        let g = graph(&[(0, 0), (60, 0)], &tech);
        let d = decompose_with_hotspots(&g, &[], SolveMode::unaware()).unwrap();
        assert_eq!(d.groups.len(), 2);
        assert_ne!(d.groups[0].mask, d.groups[1].mask);
        assert_eq!(objective_value(&d, &g, &[], SolveMode::unaware()), 0);
    }

    #[test]
    fn forty_nm_pair_groups_on_one_mask() {
        let tech = TechParams::default().with_masks(1);
        let g = graph(&[(0, 0), (40, 0)], &tech);
        let d = decompose_with_hotspots(&g, &[], SolveMode::unaware()).unwrap();
        assert_eq!(
            d.groups,
            vec![Group {
                id: 0,
                vias: vec![0, 1],
                mask: 0
            }]
        );
        assert_eq!(
            d.meta,
            DecompositionMeta {
                exact_components: 1,
                fallback_components: 0
            }
        );
    }

    #[test]
    fn isolated_via_is_singleton_on_mask_zero() {
        let g = graph(&[(500, 500)], &TechParams::default());
        let s = solve_component_exact(&[0], &g, &[], SolveMode::aware()).unwrap();
        assert_eq!(s.groups, vec![(vec![0], 0)]);
        assert_eq!(s.objective, 0);
    }

    #[test]
    fn micro_aware_two_masks_is_clean() {
        let (g, lib) = micro_with(&TechParams::default().with_masks(2));
        let phs = find_potential_hotspots(&g, &lib);
        let mode = SolveMode::aware();
        let d = decompose_with_hotspots(&g, &phs, mode).unwrap();
        assert_eq!(objective_value(&d, &g, &phs, mode), 0);
    }

    #[test]
    fn micro_one_mask_avoids_hotspot_by_grouping() {
        // k = 1: both pairs group, everything on mask 0, window has c on mask 0
        // grouped with d, so the hotspot cannot appear; objective 0.
        let (g, lib) = micro_with(&TechParams::default().with_masks(1));
        let phs = find_potential_hotspots(&g, &lib);
        let d = decompose_with_hotspots(&g, &phs, SolveMode::aware()).unwrap();
        assert_eq!(objective_value(&d, &g, &phs, SolveMode::aware()), 0);
    }

    #[test]
    fn component_limit_enforced() {
        let (g, _) = micro();
        let comp = (0..4).collect::<Vec<_>>();
        assert!(matches!(
            solve_component_exact(&comp, &g, &[], SolveMode::unaware().with_exact_limit(3)),
            Err(Error::ComponentTooLarge { size: 4, limit: 3 })
        ));
    }

    #[test]
    fn chain_of_three_heuristic() {
        let tech = TechParams::default().with_masks(2).with_max_g(2);
        let g = graph(&[(0, 0), (40, 0), (80, 0)], &tech);
        let s = solve_component_heuristic(&[0, 1, 2], &g, &[], SolveMode::unaware()).unwrap();
        assert_eq!(s.objective, 0);
        assert_eq!(
            s.groups.iter().map(|(v, _)| v.clone()).collect::<Vec<_>>(),
            vec![vec![0, 1], vec![2]]
        );
    }

    #[test]
    fn fallback_flagged_in_meta() {
        let tech = TechParams::default();
        let g = graph(&[(0, 0), (45, 0), (90, 0), (135, 0)], &tech);
        let d = decompose_with_hotspots(&g, &[], SolveMode::unaware().with_exact_limit(2)).unwrap();
        assert_eq!(
            d.meta,
            DecompositionMeta {
                exact_components: 0,
                fallback_components: 1
            }
        );
        let vias: usize = d.groups.iter().map(|g| g.vias.len()).sum();
        assert_eq!(vias, 4);
    }

    #[test]
    fn json_roundtrip() {
        let (g, _) = micro();
        let d = decompose_with_hotspots(&g, &[], SolveMode::unaware()).unwrap();
        assert_eq!(
            Decomposition::from_json_str(&d.to_json_string()).unwrap(),
            d
        );
        let v: serde_json::Value = serde_json::from_str(&d.to_json_string()).unwrap();
        assert!(v["groups"][0]["vias"].is_array());
        assert!(v["meta"]["exact_components"].is_number());
    }
}
