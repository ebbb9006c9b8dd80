//! Exhaustive grouping and coloring of a tiny layout.

use dsa_hotspot::{HotspotLibrary, Layout, TechParams, ViaId};

use crate::geometry::{brute_conflicts, is_legal_template};
use crate::matching::{placements, OracleMatch};

pub const MAX_ORACLE_VIAS: usize = 10;

pub struct OracleProblem<'a> {
    pub layout: &'a Layout,
    pub tech: TechParams,
    /// Scored hotspots when present.
    pub library: Option<&'a HotspotLibrary>,
    /// Pairs that count as conflicts on top of the geometric ones.
    pub extra_conflicts: Vec<(ViaId, ViaId)>,
    /// Groups that must appear verbatim.
    pub forced: Vec<Vec<ViaId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSolution {
    pub objective: usize,
    pub conflicts: usize,
    pub hotspots: usize,
    /// First optimum found: sorted groups with masks.
    pub groups: Vec<(Vec<ViaId>, usize)>,
}

struct Search<'a> {
    n: usize,
    k: usize,
    conflicts: Vec<(ViaId, ViaId)>,
    matches: Vec<OracleMatch>,
    library: Option<&'a HotspotLibrary>,
    best: Option<OracleSolution>,
}

impl Search<'_> {
    fn score(&mut self, blocks: &[Vec<ViaId>], masks: &[usize]) {
        let mut block_of = vec![0; self.n];
        for (b, vs) in blocks.iter().enumerate() {
            for &v in vs {
                block_of[v] = b;
            }
        }
        let mask = |v: ViaId| masks[block_of[v]];
        let conflicts = self
            .conflicts
            .iter()
            .filter(|&&(a, b)| block_of[a] != block_of[b] && mask(a) == mask(b))
            .count();
        let mut hotspots = 0;
        if let Some(lib) = self.library {
            for m in &self.matches {
                let p = &lib.patterns[m.pattern_index];
                let mk = mask(m.constituents[0]);
                let realized = m.constituents.iter().all(|&c| mask(c) == mk)
                    && m.non_constituents.iter().all(|&u| mask(u) != mk)
                    && p.segments.iter().all(|s| {
                        let b = block_of[m.constituents[s[0]]];
                        blocks[b].len() == s.len()
                            && s.iter().all(|&i| block_of[m.constituents[i]] == b)
                    })
                    && p.nodes
                        .iter()
                        .all(|&i| blocks[block_of[m.constituents[i]]].len() == 1);
                if realized {
                    hotspots += 1;
                }
            }
        }
        let objective = conflicts + hotspots;
        if self.best.as_ref().is_none_or(|b| objective < b.objective) {
            let mut groups: Vec<(Vec<ViaId>, usize)> = blocks
                .iter()
                .zip(masks)
                .map(|(b, &m)| {
                    let mut b = b.clone();
                    b.sort_unstable();
                    (b, m)
                })
                .collect();
            groups.sort();
            self.best = Some(OracleSolution {
                objective,
                conflicts,
                hotspots,
                groups,
            });
        }
    }

    fn color(&mut self, blocks: &[Vec<ViaId>], masks: &mut Vec<usize>) {
        if masks.len() == blocks.len() {
            self.score(blocks, masks);
            return;
        }
        for m in 0..self.k {
            masks.push(m);
            self.color(blocks, masks);
            masks.pop();
        }
    }
}

/// Minimum of (conflicts + realized hotspots) over every partition of the
/// layout into legal templates containing the forced groups, times every
/// mask assignment of the parts.
pub fn oracle_decompose(problem: &OracleProblem<'_>) -> OracleSolution {
    let layout = problem.layout;
    let n = layout.len();
    assert!(
        n <= MAX_ORACLE_VIAS,
        "oracle_decompose: {n} vias is too many"
    );
    let tech = &problem.tech;

    let mut conflicts = brute_conflicts(layout, tech);
    for &(a, b) in &problem.extra_conflicts {
        conflicts.push((a.min(b), a.max(b)));
    }
    conflicts.sort_unstable();
    conflicts.dedup();

    let mut search = Search {
        n,
        k: tech.num_masks,
        conflicts,
        matches: problem
            .library
            .map(|lib| placements(layout, lib, false))
            .unwrap_or_default(),
        library: problem.library,
        best: None,
    };

    // Restricted-growth enumeration of set partitions.
    let mut partitions: Vec<Vec<Vec<ViaId>>> = Vec::new();
    let mut blocks: Vec<Vec<ViaId>> = Vec::new();
    fn grow(v: usize, n: usize, blocks: &mut Vec<Vec<ViaId>>, out: &mut Vec<Vec<Vec<ViaId>>>) {
        if v == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(v);
            grow(v + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![v]);
        grow(v + 1, n, blocks, out);
        blocks.pop();
    }
    grow(0, n, &mut blocks, &mut partitions);

    for part in partitions {
        if !part.iter().all(|b| is_legal_template(layout, b, tech)) {
            continue;
        }
        let forced_ok = problem.forced.iter().all(|f| {
            let mut f = f.clone();
            f.sort_unstable();
            part.iter().any(|b| {
                let mut b = b.clone();
                b.sort_unstable();
                b == f
            })
        });
        if !forced_ok {
            continue;
        }
        search.color(&part, &mut Vec::new());
    }
    search.best.unwrap_or(OracleSolution {
        objective: 0,
        conflicts: 0,
        hotspots: 0,
        groups: Vec::new(),
    })
}
