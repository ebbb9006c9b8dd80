//! The hybrid hypergraph over a layout: conflict edges between vias that may
//! not share a mask, grouping hyper-edges for every legal DSA template, and
//! forced groups added by hotspot elimination.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{validate_layout, Layout, SpatialIndex, ViaId};
use crate::tech::TechParams;

/// A legal guiding template: 2..=max_g collinear vias in run order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupEdge {
    vias: Vec<ViaId>,
}

impl GroupEdge {
    pub fn new(vias: Vec<ViaId>) -> Self {
        GroupEdge { vias }
    }

    /// Members in run order (ascending along the shared axis).
    pub fn vias(&self) -> &[ViaId] {
        &self.vias
    }

    pub fn len(&self) -> usize {
        self.vias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vias.is_empty()
    }

    pub fn contains(&self, v: ViaId) -> bool {
        self.vias.contains(&v)
    }

    /// Member ids in ascending order; the canonical identity of the edge.
    pub fn key(&self) -> Vec<ViaId> {
        let mut k = self.vias.clone();
        k.sort_unstable();
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    Native,
    AddedByCover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConflictEdge {
    pub a: ViaId,
    pub b: ViaId,
    pub origin: EdgeOrigin,
}

impl ConflictEdge {
    pub fn new(a: ViaId, b: ViaId, origin: EdgeOrigin) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        ConflictEdge { a, b, origin }
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[derive(Debug, Clone)]
pub struct LayoutGraph {
    layout: Arc<Layout>,
    tech: TechParams,
    conflict_edges: Vec<ConflictEdge>,
    group_edges: Vec<GroupEdge>,
    forced_groups: Vec<GroupEdge>,
    components: Vec<Vec<ViaId>>,
    component_of: Vec<usize>,
    conflict_pairs: HashSet<(ViaId, ViaId)>,
    conflict_adj: Vec<Vec<ViaId>>,
    /// via -> indices into `group_edges`
    edges_of_via: Vec<Vec<usize>>,
    /// via -> index into `forced_groups`
    forced_of_via: Vec<Option<usize>>,
}

/// Builds conflict edges, grouping hyper-edges and components.
pub fn build_graph(layout: Arc<Layout>, tech: &TechParams) -> Result<LayoutGraph> {
    tech.validate()?;
    let violations = validate_layout(&layout, tech);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidLayout {
            count: violations.len(),
            first: first.to_string(),
        });
    }

    let index = SpatialIndex::new(&layout, tech.min_pitch_same_mask);
    let conflict_edges = index
        .pairs_within(tech.same_mask_sq())
        .into_iter()
        .map(|(a, b)| ConflictEdge::new(a, b, EdgeOrigin::Native))
        .collect();
    let group_edges = enumerate_group_edges(&layout, tech);

    let mut graph = LayoutGraph {
        layout,
        tech: *tech,
        conflict_edges,
        group_edges,
        forced_groups: Vec::new(),
        components: Vec::new(),
        component_of: Vec::new(),
        conflict_pairs: HashSet::new(),
        conflict_adj: Vec::new(),
        edges_of_via: Vec::new(),
        forced_of_via: Vec::new(),
    };
    graph.reindex();
    Ok(graph)
}

/// Every contiguous window (2..=max_g long) of every maximal collinear run
/// whose consecutive gaps are legal template pitches.
fn enumerate_group_edges(layout: &Layout, tech: &TechParams) -> Vec<GroupEdge> {
    let mut rows: BTreeMap<i64, Vec<(i64, ViaId)>> = BTreeMap::new();
    let mut cols: BTreeMap<i64, Vec<(i64, ViaId)>> = BTreeMap::new();
    for v in layout.vias() {
        rows.entry(v.y).or_default().push((v.x, v.id));
        cols.entry(v.x).or_default().push((v.y, v.id));
    }
    let mut edges = Vec::new();
    for line in rows.into_values().chain(cols.into_values()) {
        let mut line = line;
        line.sort_unstable();
        let mut start = 0;
        for i in 1..=line.len() {
            let breaks = i == line.len() || !tech.is_group_gap(line[i].0 - line[i - 1].0);
            if breaks {
                push_run_windows(&line[start..i], tech.max_g, &mut edges);
                start = i;
            }
        }
    }
    edges.sort_by_cached_key(|e| e.key());
    edges
}

fn push_run_windows(run: &[(i64, ViaId)], max_g: usize, out: &mut Vec<GroupEdge>) {
    for len in 2..=max_g.min(run.len()) {
        for w in run.windows(len) {
            out.push(GroupEdge::new(w.iter().map(|&(_, id)| id).collect()));
        }
    }
}

impl LayoutGraph {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn layout_arc(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn tech(&self) -> &TechParams {
        &self.tech
    }

    /// Sorted by `(a, b)`.
    pub fn conflict_edges(&self) -> &[ConflictEdge] {
        &self.conflict_edges
    }

    /// Candidate (non-forced) templates, sorted by canonical key.
    pub fn group_edges(&self) -> &[GroupEdge] {
        &self.group_edges
    }

    pub fn forced_groups(&self) -> &[GroupEdge] {
        &self.forced_groups
    }

    /// Components ordered by smallest member; members ascending.
    pub fn components(&self) -> &[Vec<ViaId>] {
        &self.components
    }

    pub fn component_of(&self, v: ViaId) -> usize {
        self.component_of[v]
    }

    pub fn has_conflict(&self, a: ViaId, b: ViaId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.conflict_pairs.contains(&key)
    }

    /// Vias sharing a conflict edge (native or added) with `v`, ascending.
    pub fn conflict_neighbors(&self, v: ViaId) -> &[ViaId] {
        &self.conflict_adj[v]
    }

    /// Indices into [`group_edges`](Self::group_edges) of non-forced templates containing `v`.
    pub fn group_edges_of(&self, v: ViaId) -> &[usize] {
        &self.edges_of_via[v]
    }

    pub fn forced_group_of(&self, v: ViaId) -> Option<&GroupEdge> {
        self.forced_of_via[v].map(|i| &self.forced_groups[i])
    }

    fn check_ids(&self, ids: &[ViaId]) -> Result<()> {
        match ids.iter().find(|&&v| v >= self.layout.len()) {
            Some(&v) => Err(Error::UnknownVia(v)),
            None => Ok(()),
        }
    }

    /// True iff some template (candidate or forced) contains all of `ids`.
    pub fn is_groupable(&self, ids: &[ViaId]) -> Result<bool> {
        self.check_ids(ids)?;
        let Some(&first) = ids.first() else {
            return Ok(!self.group_edges.is_empty() || !self.forced_groups.is_empty());
        };
        let in_candidate = self.edges_of_via[first]
            .iter()
            .any(|&e| ids.iter().all(|v| self.group_edges[e].contains(*v)));
        let in_forced = self
            .forced_group_of(first)
            .is_some_and(|g| ids.iter().all(|v| g.contains(*v)));
        Ok(in_candidate || in_forced)
    }

    /// True iff `ids` is exactly one template (candidate or forced).
    pub fn is_group_edge(&self, ids: &[ViaId]) -> bool {
        let Some(&first) = ids.first() else {
            return false;
        };
        if first >= self.layout.len() {
            return false;
        }
        let mut key = ids.to_vec();
        key.sort_unstable();
        self.edges_of_via[first]
            .iter()
            .any(|&e| self.group_edges[e].key() == key)
            || self.forced_group_of(first).is_some_and(|g| g.key() == key)
    }

    /// Union-find partition over conflict, candidate and forced edges.
    pub fn connected_components(&self) -> Vec<Vec<ViaId>> {
        let n = self.layout.len();
        let mut uf = UnionFind::new(n);
        for e in &self.conflict_edges {
            uf.union(e.a, e.b);
        }
        for g in self.group_edges.iter().chain(&self.forced_groups) {
            for w in g.vias().windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut root_slot: Vec<Option<usize>> = vec![None; n];
        let mut comps: Vec<Vec<ViaId>> = Vec::new();
        for v in 0..n {
            let r = uf.find(v);
            let slot = *root_slot[r].get_or_insert_with(|| {
                comps.push(Vec::new());
                comps.len() - 1
            });
            comps[slot].push(v);
        }
        comps
    }

    pub(crate) fn add_conflict(&mut self, a: ViaId, b: ViaId) -> Result<()> {
        self.check_ids(&[a, b])?;
        if a == b {
            return Err(Error::Inconsistent(format!("self conflict on via {a}")));
        }
        if self.has_conflict(a, b) {
            return Ok(());
        }
        let edge = ConflictEdge::new(a, b, EdgeOrigin::AddedByCover);
        let pos = self
            .conflict_edges
            .partition_point(|e| (e.a, e.b) < (edge.a, edge.b));
        self.conflict_edges.insert(pos, edge);
        self.conflict_pairs.insert((edge.a, edge.b));
        for (x, y) in [(edge.a, edge.b), (edge.b, edge.a)] {
            let adj = &mut self.conflict_adj[x];
            let at = adj.partition_point(|&u| u < y);
            adj.insert(at, y);
        }
        Ok(())
    }

    /// Moves a candidate template into the forced set. Batch callers must
    /// follow up with [`finish_updates`](Self::finish_updates).
    pub(crate) fn force_group(&mut self, group: &GroupEdge) -> Result<()> {
        let key = group.key();
        let Some(pos) = self.group_edges.iter().position(|g| g.key() == key) else {
            return Err(Error::Inconsistent(format!(
                "forced group {:?} is not a candidate template",
                group.vias()
            )));
        };
        if let Some(v) = group
            .vias()
            .iter()
            .find(|&&v| self.forced_of_via[v].is_some())
        {
            return Err(Error::Inconsistent(format!(
                "forced group {:?} overlaps an existing forced group at via {v}",
                group.vias()
            )));
        }
        let g = self.group_edges.remove(pos);
        let idx = self.forced_groups.len();
        for &v in g.vias() {
            self.forced_of_via[v] = Some(idx);
        }
        self.forced_groups.push(g);
        Ok(())
    }

    /// Drops candidate templates that touch a forced group (a via belongs to
    /// exactly one template) and rebuilds indices and components.
    pub(crate) fn finish_updates(&mut self) {
        let forced = &self.forced_of_via;
        self.group_edges
            .retain(|g| g.vias().iter().all(|&v| forced[v].is_none()));
        self.forced_groups.sort_by_cached_key(|g| g.key());
        self.reindex();
    }

    fn reindex(&mut self) {
        let n = self.layout.len();
        self.conflict_pairs = self.conflict_edges.iter().map(|e| (e.a, e.b)).collect();
        self.conflict_adj = vec![Vec::new(); n];
        for e in &self.conflict_edges {
            self.conflict_adj[e.a].push(e.b);
            self.conflict_adj[e.b].push(e.a);
        }
        for adj in &mut self.conflict_adj {
            adj.sort_unstable();
        }
        self.edges_of_via = vec![Vec::new(); n];
        for (i, g) in self.group_edges.iter().enumerate() {
            for &v in g.vias() {
                self.edges_of_via[v].push(i);
            }
        }
        self.forced_of_via = vec![None; n];
        for (i, g) in self.forced_groups.iter().enumerate() {
            for &v in g.vias() {
                self.forced_of_via[v] = Some(i);
            }
        }
        self.components = self.connected_components();
        self.component_of = vec![0; n];
        for (c, members) in self.components.iter().enumerate() {
            for &v in members {
                self.component_of[v] = c;
            }
        }
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump {
            vias: self
                .layout
                .vias()
                .iter()
                .map(|v| DumpVia {
                    id: v.id,
                    x: v.x,
                    y: v.y,
                })
                .collect(),
            conflicts: self.conflict_edges.clone(),
            group_edges: self.group_edges.clone(),
            forced_groups: self.forced_groups.clone(),
            components: self.components.clone(),
        }
    }
}

/// JSON debug view of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub vias: Vec<DumpVia>,
    pub conflicts: Vec<ConflictEdge>,
    pub group_edges: Vec<GroupEdge>,
    pub forced_groups: Vec<GroupEdge>,
    pub components: Vec<Vec<ViaId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpVia {
    pub id: ViaId,
    pub x: i64,
    pub y: i64,
}
