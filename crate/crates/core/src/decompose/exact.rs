//! Branch and bound over (grouping, coloring) assignments of one component.
//!
//! Vias are branched in ascending local index. Each via either joins an
//! existing open group (when the enlarged group is still a prefix of some
//! template) or seeds a new group on one of the masks. New groups may only
//! use masks up to one past the highest mask used so far, which removes
//! mask-permutation symmetry. The bound is the cost already fixed by the
//! partial assignment: conflicts between assigned vias, plus hotspots whose
//! relevant vias are all assigned.

use super::{heuristic, Assignment, ComponentProblem};

const UNASSIGNED: usize = usize::MAX;

pub(crate) fn solve(p: &ComponentProblem, aware: bool) -> (Assignment, usize) {
    let n = p.len();
    let start = heuristic::solve(p, aware);
    let start_cost = p.objective(&start, aware);
    if n == 0 {
        return (start, 0);
    }

    let mut settle_at = vec![Vec::new(); n];
    if aware {
        for i in 0..p.hotspots.len() {
            settle_at[settle_index(p, i)].push(i);
        }
    }

    let mut search = Search {
        p,
        aware,
        settle_at,
        state: Assignment {
            group_of: vec![UNASSIGNED; n],
            groups: Vec::new(),
            mask: Vec::new(),
        },
        forced_group: Vec::new(),
        masks_used: 0,
        cost: 0,
        // Strictly below start_cost + 1: the first optimum in branching
        // order is returned even when the heuristic is already optimal.
        best_cost: start_cost + 1,
        best: None,
    };
    search.dfs(0);
    match search.best {
        Some(best) => (best, search.best_cost),
        None => (start, start_cost),
    }
}

/// Largest local index whose assignment can still change whether hotspot
/// `h` is realized: its window vias and anything that may join a
/// constituent's template.
fn settle_index(p: &ComponentProblem, h: usize) -> usize {
    let hs = &p.hotspots[h];
    let mut last = hs
        .constituents
        .iter()
        .chain(&hs.non_constituents)
        .copied()
        .max()
        .unwrap_or(0);
    for &c in &hs.constituents {
        for &e in &p.edges_of[c] {
            last = last.max(*p.edges[e].last().expect("non-empty template"));
        }
        if let Some(f) = p.forced_of[c] {
            last = last.max(*p.forced[f].last().expect("non-empty forced group"));
        }
    }
    last
}

struct Search<'a> {
    p: &'a ComponentProblem,
    aware: bool,
    settle_at: Vec<Vec<usize>>,
    state: Assignment,
    forced_group: Vec<bool>,
    masks_used: usize,
    cost: usize,
    best_cost: usize,
    best: Option<Assignment>,
}

impl Search<'_> {
    fn dfs(&mut self, v: usize) {
        if v == self.p.len() {
            if self.cost < self.best_cost && self.groups_are_templates() {
                self.best_cost = self.cost;
                self.best = Some(self.state.clone());
            }
            return;
        }
        if let Some(f) = self.p.forced_of[v] {
            let first = self.p.forced[f][0];
            if first == v {
                self.branch_new(v, true);
            } else {
                let g = self.state.group_of[first];
                self.branch_join(v, g);
            }
            return;
        }
        for g in 0..self.state.groups.len() {
            if !self.forced_group[g] && self.can_join(g, v) {
                self.branch_join(v, g);
            }
        }
        self.branch_new(v, false);
    }

    /// `v` may join `g` if some template holds `g + v` and every member of
    /// that template below `v` is already in `g`.
    fn can_join(&self, g: usize, v: usize) -> bool {
        let members = &self.state.groups[g];
        self.p.edges_of[v].iter().any(|&e| {
            let edge = &self.p.edges[e];
            edge.iter().filter(|&&x| x < v).eq(members.iter())
        })
    }

    fn groups_are_templates(&self) -> bool {
        self.state.groups.iter().enumerate().all(|(g, members)| {
            members.len() < 2
                || self.forced_group[g]
                || self.p.edges_of[members[0]]
                    .iter()
                    .any(|&e| self.p.edges[e] == *members)
        })
    }

    fn conflict_delta(&self, v: usize, g: usize, m: usize) -> usize {
        self.p.conflicts[v]
            .iter()
            .filter(|&&u| u < v)
            .filter(|&&u| {
                let gu = self.state.group_of[u];
                gu != g && self.state.mask[gu] == m
            })
            .count()
    }

    fn settle_delta(&self, v: usize) -> usize {
        if !self.aware {
            return 0;
        }
        self.settle_at[v]
            .iter()
            .filter(|&&h| self.p.is_realized(&self.p.hotspots[h], &self.state))
            .count()
    }

    fn descend(&mut self, v: usize, delta: usize) {
        if self.cost + delta >= self.best_cost {
            return;
        }
        let settle = self.settle_delta(v);
        if self.cost + delta + settle >= self.best_cost {
            return;
        }
        self.cost += delta + settle;
        self.dfs(v + 1);
        self.cost -= delta + settle;
    }

    fn branch_join(&mut self, v: usize, g: usize) {
        let delta = self.conflict_delta(v, g, self.state.mask[g]);
        self.state.group_of[v] = g;
        self.state.groups[g].push(v);
        self.descend(v, delta);
        self.state.groups[g].pop();
        self.state.group_of[v] = UNASSIGNED;
    }

    fn branch_new(&mut self, v: usize, forced: bool) {
        let g = self.state.groups.len();
        let limit = self.p.k.min(self.masks_used + 1);
        for m in 0..limit {
            let delta = self.conflict_delta(v, g, m);
            let prev_used = self.masks_used;
            self.masks_used = self.masks_used.max(m + 1);
            self.state.groups.push(vec![v]);
            self.state.mask.push(m);
            self.forced_group.push(forced);
            self.state.group_of[v] = g;

            self.descend(v, delta);

            self.state.group_of[v] = UNASSIGNED;
            self.forced_group.pop();
            self.state.mask.pop();
            self.state.groups.pop();
            self.masks_used = prev_used;
        }
    }
}
