//! Greedy grouping and coloring for components too large to solve exactly.

use super::{Assignment, ComponentProblem};

const MAX_PASSES: usize = 32;

pub(crate) fn solve(p: &ComponentProblem, aware: bool) -> Assignment {
    let n = p.len();
    let mut taken = vec![false; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();

    for f in &p.forced {
        for &v in f {
            taken[v] = true;
        }
        groups.push(f.clone());
    }

    // Longest templates first, ties by member ids.
    let mut order: Vec<usize> = (0..p.edges.len()).collect();
    order.sort_by(|&a, &b| {
        p.edges[b]
            .len()
            .cmp(&p.edges[a].len())
            .then_with(|| p.edges[a].cmp(&p.edges[b]))
    });
    for e in order {
        let edge = &p.edges[e];
        if edge.iter().all(|&v| !taken[v]) {
            for &v in edge {
                taken[v] = true;
            }
            groups.push(edge.clone());
        }
    }
    groups.extend((0..n).filter(|&v| !taken[v]).map(|v| vec![v]));
    groups.sort();

    let mut group_of = vec![0; n];
    for (g, members) in groups.iter().enumerate() {
        for &v in members {
            group_of[v] = g;
        }
    }

    let mut a = Assignment {
        group_of,
        mask: vec![0; groups.len()],
        groups,
    };

    // Greedy coloring in group order, fewest conflicts with colored groups.
    let mut colored = vec![false; a.groups.len()];
    let mut counts = vec![0usize; p.k];
    for g in 0..a.groups.len() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &v in &a.groups[g] {
            for &u in &p.conflicts[v] {
                let gu = a.group_of[u];
                if gu != g && colored[gu] {
                    counts[a.mask[gu]] += 1;
                }
            }
        }
        let best = (0..p.k).min_by_key(|&m| (counts[m], m)).unwrap_or(0);
        a.mask[g] = best;
        colored[g] = true;
    }

    if p.k > 1 {
        improve(p, &mut a, aware);
    }
    a
}

/// Recolors single groups while that strictly lowers the objective.
fn improve(p: &ComponentProblem, a: &mut Assignment, aware: bool) {
    let mut touched: Vec<usize> = Vec::new();
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        for g in 0..a.groups.len() {
            let m0 = a.mask[g];

            touched.clear();
            if aware {
                for &v in &a.groups[g] {
                    touched.extend_from_slice(&p.hotspots_of[v]);
                }
                touched.sort_unstable();
                touched.dedup();
            }
            let realized = |a: &Assignment| {
                touched
                    .iter()
                    .filter(|&&h| p.is_realized(&p.hotspots[h], a))
                    .count() as i64
            };
            let before = realized(a);

            let mut best: Option<(i64, usize)> = None;
            for m in (0..p.k).filter(|&m| m != m0) {
                let mut delta = 0i64;
                for &v in &a.groups[g] {
                    for &u in &p.conflicts[v] {
                        let gu = a.group_of[u];
                        if gu == g {
                            continue;
                        }
                        let mu = a.mask[gu];
                        delta += i64::from(mu == m) - i64::from(mu == m0);
                    }
                }
                if aware && !touched.is_empty() {
                    a.mask[g] = m;
                    delta += realized(a) - before;
                    a.mask[g] = m0;
                }
                if delta < 0 && best.is_none_or(|(d, _)| delta < d) {
                    best = Some((delta, m));
                }
            }
            if let Some((_, m)) = best {
                a.mask[g] = m;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}
