//! Greedy set cover of potential hotspots by eliminators.
//!
//! Candidates live in a bucket list keyed by their current frequency (the
//! number of still-uncovered hotspots they kill). Each round takes the
//! candidate with the highest frequency, breaking ties by canonical order
//! (conflicts before affinities, then ascending via ids). Covering a hotspot
//! decrements every other candidate that shares it, so every
//! (candidate, hotspot) incidence moves a candidate at most once.
//!
//! Picks can make other candidates inconsistent with the graph: a forced
//! template cannot contain an added conflict pair, and a via belongs to one
//! template. Those candidates are invalidated when the pick happens.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeOrigin, LayoutGraph};
use crate::matcher::{Eliminator, EliminatorKind};

/// Frequency-indexed buckets of candidate slots. Each bucket is ordered so
/// the smallest slot (the canonical tie-break winner) comes out first.
#[derive(Debug, Clone, Default)]
pub struct BucketList {
    buckets: Vec<BTreeSet<usize>>,
    /// slot -> frequency; 0 means absent.
    freq: Vec<usize>,
    max_freq: usize,
    relocations: usize,
}

impl BucketList {
    pub fn new(slots: usize) -> Self {
        BucketList {
            buckets: vec![BTreeSet::new()],
            freq: vec![0; slots],
            max_freq: 0,
            relocations: 0,
        }
    }

    pub fn insert(&mut self, slot: usize, freq: usize) {
        debug_assert_eq!(self.freq[slot], 0, "slot {slot} already present");
        if freq == 0 {
            return;
        }
        if self.buckets.len() <= freq {
            self.buckets.resize_with(freq + 1, BTreeSet::new);
        }
        self.buckets[freq].insert(slot);
        self.freq[slot] = freq;
        self.max_freq = self.max_freq.max(freq);
    }

    pub fn remove(&mut self, slot: usize) {
        let f = std::mem::take(&mut self.freq[slot]);
        if f > 0 {
            self.buckets[f].remove(&slot);
        }
    }

    /// Moves `slot` one bucket down; at zero it leaves the structure.
    pub fn decrement(&mut self, slot: usize) {
        let f = self.freq[slot];
        if f == 0 {
            return;
        }
        self.buckets[f].remove(&slot);
        self.freq[slot] = f - 1;
        if f > 1 {
            self.buckets[f - 1].insert(slot);
        }
        self.relocations += 1;
    }

    pub fn frequency(&self, slot: usize) -> usize {
        self.freq[slot]
    }

    /// Highest non-empty frequency, 0 when empty.
    pub fn max_freq(&mut self) -> usize {
        while self.max_freq > 0 && self.buckets[self.max_freq].is_empty() {
            self.max_freq -= 1;
        }
        self.max_freq
    }

    /// Takes the smallest slot from the highest bucket.
    pub fn pop_max(&mut self) -> Option<(usize, usize)> {
        let f = self.max_freq();
        if f == 0 {
            return None;
        }
        let slot = self.buckets[f].pop_first()?;
        self.freq[slot] = 0;
        Some((slot, f))
    }

    pub fn relocations(&self) -> usize {
        self.relocations
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenEliminator {
    pub id: usize,
    pub kind: EliminatorKind,
    /// Hotspots newly covered when this was picked.
    pub marginal: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverStats {
    pub iterations: usize,
    pub invalidations: usize,
    pub relocations: usize,
    /// Sum of `|covers|` over all candidates.
    pub incidences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    pub chosen: Vec<ChosenEliminator>,
    pub covered: Vec<usize>,
    pub residual: Vec<usize>,
    pub stats: CoverStats,
}

impl CoverResult {
    pub fn chosen_ids(&self) -> Vec<usize> {
        self.chosen.iter().map(|c| c.id).collect()
    }
}

/// Runs greedy set cover over hotspots `0..universe`.
pub fn greedy_cover(universe: usize, candidates: &[Eliminator]) -> Result<CoverResult> {
    if let Some((e, h)) = candidates.iter().find_map(|e| {
        e.covers
            .iter()
            .find(|&&h| h >= universe)
            .map(|&h| (e.id, h))
    }) {
        return Err(Error::Inconsistent(format!(
            "candidate {e} covers hotspot {h} outside universe of {universe}"
        )));
    }

    // Slots are candidate positions in canonical order.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_cached_key(|&i| (candidates[i].kind.canonical_key(), candidates[i].id));
    let cands: Vec<&Eliminator> = order.iter().map(|&i| &candidates[i]).collect();
    let n = cands.len();

    let max_via = cands
        .iter()
        .flat_map(|c| c.kind.vias())
        .max()
        .map_or(0, |v| v + 1);
    let mut conflicts_of: Vec<Vec<usize>> = vec![Vec::new(); max_via];
    let mut affinities_of: Vec<Vec<usize>> = vec![Vec::new(); max_via];
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); universe];
    let mut buckets = BucketList::new(n);
    let mut incidences = 0;
    for (slot, c) in cands.iter().enumerate() {
        let index = match c.kind {
            EliminatorKind::Conflict { .. } => &mut conflicts_of,
            EliminatorKind::Affinity { .. } => &mut affinities_of,
        };
        for v in c.kind.vias() {
            index[v].push(slot);
        }
        let mut covers = c.covers.clone();
        covers.sort_unstable();
        covers.dedup();
        for &h in &covers {
            covering[h].push(slot);
        }
        incidences += covers.len();
        buckets.insert(slot, covers.len());
    }

    let mut live = vec![true; n];
    let mut uncovered = vec![true; universe];
    let mut chosen = Vec::new();
    let mut invalidations = 0;

    while let Some((slot, freq)) = buckets.pop_max() {
        let cand = cands[slot];
        live[slot] = false;
        let mut marginal = 0;
        for &h in &cand.covers {
            if !std::mem::replace(&mut uncovered[h], false) {
                continue;
            }
            marginal += 1;
            for &other in &covering[h] {
                if live[other] {
                    buckets.decrement(other);
                }
            }
        }
        debug_assert_eq!(marginal, freq, "bucket frequency out of sync");
        chosen.push(ChosenEliminator {
            id: cand.id,
            kind: cand.kind.clone(),
            marginal,
        });

        let mut invalidate = |s: usize, live: &mut Vec<bool>, buckets: &mut BucketList| {
            if live[s] {
                live[s] = false;
                buckets.remove(s);
                invalidations += 1;
            }
        };
        match &cand.kind {
            EliminatorKind::Conflict { a, b } => {
                for &s in &affinities_of[*a] {
                    if let EliminatorKind::Affinity { group } = &cands[s].kind {
                        if group.contains(*b) {
                            invalidate(s, &mut live, &mut buckets);
                        }
                    }
                }
            }
            EliminatorKind::Affinity { group } => {
                for &v in group.vias() {
                    for &s in &conflicts_of[v] {
                        if cands[s].kind.vias().iter().all(|u| group.contains(*u)) {
                            invalidate(s, &mut live, &mut buckets);
                        }
                    }
                    for &s in &affinities_of[v] {
                        invalidate(s, &mut live, &mut buckets);
                    }
                }
            }
        }
    }

    let (covered, residual): (Vec<usize>, Vec<usize>) = (0..universe).partition(|&h| !uncovered[h]);
    Ok(CoverResult {
        stats: CoverStats {
            iterations: chosen.len(),
            invalidations,
            relocations: buckets.relocations(),
            incidences,
        },
        chosen,
        covered,
        residual,
    })
}

/// Adds chosen conflicts as `AddedByCover` edges and moves chosen
/// affinities into the forced set, then recomputes components.
pub fn apply_eliminators(graph: &LayoutGraph, result: &CoverResult) -> Result<LayoutGraph> {
    let mut g = graph.clone();
    for c in &result.chosen {
        match &c.kind {
            EliminatorKind::Conflict { a, b } => g.add_conflict(*a, *b)?,
            EliminatorKind::Affinity { group } => g.force_group(group)?,
        }
    }
    g.finish_updates();
    let added: std::collections::HashSet<(usize, usize)> = g
        .conflict_edges()
        .iter()
        .filter(|e| e.origin == EdgeOrigin::AddedByCover)
        .map(|e| (e.a, e.b))
        .collect();
    for group in g.forced_groups() {
        let vias = group.key();
        for (i, &a) in vias.iter().enumerate() {
            if let Some(&b) = vias[i + 1..].iter().find(|&&b| added.contains(&(a, b))) {
                return Err(Error::Inconsistent(format!(
                    "forced group {vias:?} contains added conflict ({a}, {b})"
                )));
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::micro;
    use crate::graph::GroupEdge;
    use crate::matcher::{enumerate_eliminators, find_potential_hotspots, EliminatorState};

    fn conflict(id: usize, a: usize, b: usize, covers: &[usize]) -> Eliminator {
        Eliminator {
            id,
            kind: EliminatorKind::Conflict { a, b },
            covers: covers.to_vec(),
            state: EliminatorState::Live,
        }
    }

    fn affinity(id: usize, vias: &[usize], covers: &[usize]) -> Eliminator {
        Eliminator {
            id,
            kind: EliminatorKind::Affinity {
                group: GroupEdge::new(vias.to_vec()),
            },
            covers: covers.to_vec(),
            state: EliminatorState::Live,
        }
    }

    #[test]
    fn bucket_list_basics() {
        let mut b = BucketList::new(4);
        b.insert(2, 3);
        b.insert(0, 3);
        b.insert(1, 1);
        assert_eq!(b.max_freq(), 3);
        b.decrement(0);
        assert_eq!(b.frequency(0), 2);
        assert_eq!(b.pop_max(), Some((2, 3)));
        assert_eq!(b.pop_max(), Some((0, 2)));
        b.remove(1);
        assert_eq!(b.pop_max(), None);
        assert_eq!(b.max_freq(), 0);
        assert_eq!(b.relocations(), 1);
    }

    #[test]
    fn classic_instance_picks_the_big_set() {
        let cands = [
            conflict(0, 0, 1, &[0, 1, 2]),
            conflict(1, 2, 3, &[0, 1]),
            conflict(2, 4, 5, &[2]),
        ];
        let r = greedy_cover(3, &cands).unwrap();
        assert_eq!(r.chosen_ids(), vec![0]);
        assert_eq!(r.covered, vec![0, 1, 2]);
        assert!(r.residual.is_empty());
    }

    #[test]
    fn empty_universe() {
        let r = greedy_cover(0, &[]).unwrap();
        assert!(r.chosen.is_empty() && r.covered.is_empty() && r.residual.is_empty());
    }

    #[test]
    fn out_of_universe_cover_rejected() {
        assert!(greedy_cover(1, &[conflict(0, 0, 1, &[3])]).is_err());
    }

    #[test]
    fn micro_picks_conflict_a_d() {
        let (g, lib) = micro();
        let phs = find_potential_hotspots(&g, &lib);
        let cands = enumerate_eliminators(&phs, &g);
        let r = greedy_cover(phs.len(), &cands).unwrap();
        assert_eq!(r.chosen.len(), 1);
        assert_eq!(r.chosen[0].kind, EliminatorKind::Conflict { a: 0, b: 3 });
    }

    #[test]
    fn tie_break_ignores_input_ids() {
        // Same two candidates under swapped ids: canonical order still
        // prefers the conflict.
        let a = [affinity(0, &[5, 6], &[0]), conflict(1, 1, 2, &[0])];
        let b = [conflict(0, 1, 2, &[0]), affinity(1, &[5, 6], &[0])];
        let ka = greedy_cover(1, &a).unwrap().chosen[0].kind.clone();
        let kb = greedy_cover(1, &b).unwrap().chosen[0].kind.clone();
        assert_eq!(ka, kb);
        assert!(matches!(ka, EliminatorKind::Conflict { .. }));
    }

    #[test]
    fn affinity_pick_invalidates_overlaps() {
        // Affinity {1,2} wins with 3; it kills the conflict inside it and
        // the overlapping affinity {2,3}, leaving hotspot 4 residual.
        let cands = [
            conflict(0, 1, 2, &[3]),
            affinity(1, &[1, 2], &[0, 1, 2]),
            affinity(2, &[2, 3], &[0, 4]),
        ];
        let r = greedy_cover(5, &cands).unwrap();
        assert_eq!(r.chosen_ids(), vec![1]);
        assert_eq!(r.residual, vec![3, 4]);
        assert_eq!(r.stats.invalidations, 2);
    }

    #[test]
    fn conflict_pick_invalidates_containing_affinity() {
        let cands = [
            conflict(0, 1, 3, &[0, 1]),
            affinity(1, &[1, 2, 3], &[2]),
            affinity(2, &[1, 2], &[2]),
        ];
        let r = greedy_cover(3, &cands).unwrap();
        assert_eq!(r.chosen_ids(), vec![0, 2]);
        assert_eq!(r.stats.invalidations, 1);
    }

    #[test]
    fn relocations_bounded_by_incidences() {
        let cands: Vec<_> = (0..20)
            .map(|i| {
                conflict(
                    i,
                    2 * i,
                    2 * i + 1,
                    &(0..30).filter(|h| (h + i) % 3 != 0).collect::<Vec<_>>(),
                )
            })
            .collect();
        let r = greedy_cover(30, &cands).unwrap();
        assert!(r.stats.relocations <= r.stats.incidences);
        assert!(r.residual.is_empty());
        assert!(r.chosen.iter().all(|c| c.marginal > 0));
    }

    #[test]
    fn apply_conflict_adds_edge() {
        let (g, lib) = micro();
        let phs = find_potential_hotspots(&g, &lib);
        let r = greedy_cover(phs.len(), &enumerate_eliminators(&phs, &g)).unwrap();
        let g2 = apply_eliminators(&g, &r).unwrap();
        assert_eq!(g2.conflict_edges().len(), g.conflict_edges().len() + 1);
        assert!(g2.has_conflict(0, 3));
        assert!(g2
            .conflict_edges()
            .iter()
            .any(|e| (e.a, e.b, e.origin) == (0, 3, EdgeOrigin::AddedByCover)));
        // a-d bridges the two 2-via clusters.
        assert_eq!(g.components().len(), 2);
        assert_eq!(g2.components().len(), 1);
    }

    #[test]
    fn apply_affinity_forces_group() {
        let (g, _) = micro();
        let r = CoverResult {
            chosen: vec![ChosenEliminator {
                id: 0,
                kind: EliminatorKind::Affinity {
                    group: GroupEdge::new(vec![3, 2]),
                },
                marginal: 1,
            }],
            covered: vec![0],
            residual: vec![],
            stats: CoverStats::default(),
        };
        let g2 = apply_eliminators(&g, &r).unwrap();
        assert_eq!(g2.forced_groups(), &[GroupEdge::new(vec![3, 2])]);
        assert!(g2
            .group_edges()
            .iter()
            .all(|e| !e.contains(2) && !e.contains(3)));
        assert_eq!(g2.group_edges().len(), 1);
    }
}
