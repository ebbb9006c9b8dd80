//! Quadratic-time geometric predicates.

use std::collections::BTreeSet;

use dsa_hotspot::{Layout, TechParams, ViaId};

fn d2(layout: &Layout, a: ViaId, b: ViaId) -> i64 {
    let (p, q) = (&layout.vias()[a], &layout.vias()[b]);
    (p.x - q.x).pow(2) + (p.y - q.y).pow(2)
}

/// All pairs closer than the single-mask pitch, `a < b`, sorted.
pub fn brute_conflicts(layout: &Layout, tech: &TechParams) -> Vec<(ViaId, ViaId)> {
    let limit = tech.min_pitch_same_mask * tech.min_pitch_same_mask;
    let n = layout.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if d2(layout, a, b) < limit {
                out.push((a, b));
            }
        }
    }
    out
}

/// Whether `vias` (any order) can be printed as one template: one via, or
/// 2..=max_g collinear vias whose neighbors along the line are at legal
/// pitch with no other layout via on the segment between them.
pub fn is_legal_template(layout: &Layout, vias: &[ViaId], tech: &TechParams) -> bool {
    if vias.len() == 1 {
        return true;
    }
    if vias.len() < 2 || vias.len() > tech.max_g {
        return false;
    }
    let pts: Vec<(i64, i64)> = vias
        .iter()
        .map(|&v| (layout.vias()[v].x, layout.vias()[v].y))
        .collect();
    let same_x = pts.iter().all(|p| p.0 == pts[0].0);
    let same_y = pts.iter().all(|p| p.1 == pts[0].1);
    if !(same_x || same_y) {
        return false;
    }
    let mut along: Vec<i64> = pts.iter().map(|p| if same_x { p.1 } else { p.0 }).collect();
    along.sort_unstable();
    let line = if same_x { pts[0].0 } else { pts[0].1 };
    for w in along.windows(2) {
        let gap = w[1] - w[0];
        if gap < tech.min_group_pitch() || gap > tech.max_dsa_pitch {
            return false;
        }
        let between = layout.vias().iter().any(|v| {
            let (on, t) = if same_x {
                (v.x == line, v.y)
            } else {
                (v.y == line, v.x)
            };
            on && t > w[0] && t < w[1]
        });
        if between {
            return false;
        }
    }
    true
}

/// Every legal multi-via template, as sorted id lists, sorted.
pub fn brute_group_edges(layout: &Layout, tech: &TechParams) -> Vec<Vec<ViaId>> {
    let n = layout.len();
    let mut out = BTreeSet::new();
    let mut level: BTreeSet<Vec<ViaId>> = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            if is_legal_template(layout, &[a, b], tech) {
                level.insert(vec![a, b]);
            }
        }
    }
    // A legal template of k+1 vias contains a legal one of k vias (drop an
    // end), so growing legal sets by any via reaches all of them.
    while !level.is_empty() {
        out.extend(level.iter().cloned());
        let mut next = BTreeSet::new();
        for s in &level {
            if s.len() >= tech.max_g {
                continue;
            }
            for v in 0..n {
                if s.contains(&v) {
                    continue;
                }
                let mut t = s.clone();
                t.push(v);
                t.sort_unstable();
                if is_legal_template(layout, &t, tech) {
                    next.insert(t);
                }
            }
        }
        level = next;
    }
    out.into_iter().collect()
}

/// Connected components by breadth-first search over conflict pairs and
/// template pairs, each sorted, ordered by smallest member.
pub fn brute_components(
    n: usize,
    pairs: &[(ViaId, ViaId)],
    templates: &[Vec<ViaId>],
) -> Vec<Vec<ViaId>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adj[a].push(b);
        adj[b].push(a);
    }
    for t in templates {
        for w in t.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
