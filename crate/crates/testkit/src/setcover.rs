//! Greedy set cover by full rescan.

use dsa_hotspot::{Eliminator, EliminatorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCover {
    /// Chosen candidate ids in pick order.
    pub sequence: Vec<usize>,
    /// Newly covered count per pick.
    pub marginals: Vec<usize>,
    pub residual: Vec<usize>,
}

fn kills(chosen: &EliminatorKind, other: &EliminatorKind) -> bool {
    match (chosen, other) {
        (EliminatorKind::Conflict { a, b }, EliminatorKind::Affinity { group }) => {
            group.vias().contains(a) && group.vias().contains(b)
        }
        (EliminatorKind::Affinity { group }, EliminatorKind::Conflict { a, b }) => {
            group.vias().contains(a) && group.vias().contains(b)
        }
        (EliminatorKind::Affinity { group }, EliminatorKind::Affinity { group: g2 }) => {
            group.vias().iter().any(|v| g2.vias().contains(v))
        }
        (EliminatorKind::Conflict { .. }, EliminatorKind::Conflict { .. }) => false,
    }
}

/// Each round scans every live candidate, takes the one covering the most
/// still-uncovered hotspots (ties: conflicts before templates, then smaller
/// via ids, then smaller id), and drops the candidates it contradicts.
pub fn oracle_setcover(universe: usize, candidates: &[Eliminator]) -> OracleCover {
    let mut uncovered = vec![true; universe];
    let mut live = vec![true; candidates.len()];
    let mut sequence = Vec::new();
    let mut marginals = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (i, c) in candidates.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let mut hs = c.covers.clone();
            hs.sort_unstable();
            hs.dedup();
            let gain = hs.iter().filter(|&&h| uncovered[h]).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((j, g)) => {
                    gain > g
                        || (gain == g
                            && (c.kind.canonical_key(), c.id)
                                < (candidates[j].kind.canonical_key(), candidates[j].id))
                }
            };
            if better {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        live[i] = false;
        for &h in &candidates[i].covers {
            uncovered[h] = false;
        }
        sequence.push(candidates[i].id);
        marginals.push(gain);
        for (j, other) in candidates.iter().enumerate() {
            if live[j] && kills(&candidates[i].kind, &other.kind) {
                live[j] = false;
            }
        }
    }
    OracleCover {
        sequence,
        marginals,
        residual: (0..universe).filter(|&h| uncovered[h]).collect(),
    }
}
