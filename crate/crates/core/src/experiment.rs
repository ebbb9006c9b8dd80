//! Three-way comparison on seeded instances: (a) exact hotspot-aware,
//! (b) exact hotspot-unaware, (c) greedy cover followed by exact unaware.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{apply_eliminators, greedy_cover};
use crate::decompose::{
    decompose_with_hotspots, solve_units, Decomposition, SolveMode, DEFAULT_EXACT_LIMIT,
};
use crate::error::Result;
use crate::graph::{build_graph, LayoutGraph};
use crate::hotspot::{gen_random_patterns, HotspotLibrary, PatternGenSpec};
use crate::layout::{gen_random_layout, GridSpec};
use crate::matcher::{
    enumerate_eliminators, find_potential_hotspots, EliminatorKind, Origin, PotentialHotspot,
};
use crate::tech::TechParams;
use crate::verify::{verify, ViolationReport};

/// Reference violation ratios (aware / unaware / cover) at full scale, for context.
pub const REFERENCE_RATIOS: [(usize, [f64; 3]); 2] =
    [(2, [1.0, 5.13, 1.18]), (3, [1.0, 6.52, 1.34])];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub instances: usize,
    /// Instance `i` uses layout seed `seed + i`.
    pub seed: u64,
    pub grid: GridSpec,
    pub patterns: PatternGenSpec,
    pub tech: TechParams,
    pub exact_limit: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        // Small dense clips so every hotspot-coupled unit fits the exact
        // solver; 60 nm columns make horizontal neighbors conflict.
        ExperimentSpec {
            instances: 200,
            seed: 1,
            grid: GridSpec {
                rows: 5,
                cols: 4,
                pitch_x: 60,
                pitch_y: 45,
                density: 0.5,
                ..GridSpec::default()
            },
            patterns: PatternGenSpec {
                cell_pitch_x: 60,
                min_vias: 3,
                ..PatternGenSpec::default()
            },
            tech: TechParams::default(),
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violations {
    pub conflicts: usize,
    pub hotspots: usize,
    pub total: usize,
}

impl Violations {
    fn of(r: &ViolationReport) -> Self {
        Violations {
            conflicts: r.n_conflicts,
            hotspots: r.n_hotspots,
            total: r.n_violations,
        }
    }

    fn add(&mut self, other: &Violations) {
        self.conflicts += other.conflicts;
        self.hotspots += other.hotspots;
        self.total += other.total;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: usize,
    pub seed: u64,
    pub n_vias: usize,
    pub n_potential_hotspots: usize,
    /// Why the instance was left out of the totals, if it was.
    pub skipped: Option<String>,
    pub optimal_aware: Option<Violations>,
    pub unaware: Option<Violations>,
    pub cover_unaware: Option<Violations>,
    pub n_chosen: usize,
    /// Chosen eliminators the final decomposition honors.
    pub honored: usize,
    /// Hotspots covered by an honored eliminator that were realized anyway.
    pub soundness_exceptions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub max_g: usize,
    pub num_masks: usize,
    pub instances: Vec<InstanceResult>,
    pub evaluated: usize,
    pub skipped: usize,
    pub optimal_aware: Violations,
    pub unaware: Violations,
    pub cover_unaware: Violations,
    /// `[a, b, c]` totals divided by the aware total; `None` if that is 0.
    pub ratios: Option<[f64; 3]>,
    /// `(b - c) / (b - a)`; `None` when b == a.
    pub gap_closure: Option<f64>,
    pub reference_ratios: Option<[f64; 3]>,
    pub soundness_exceptions: usize,
}

impl ExperimentTable {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>6} | {:>14} {:>14} {:>14}",
            "inst", "vias", "pots", "optimal-aware", "unaware", "cover+unaware"
        );
        let cell =
            |v: &Option<Violations>| v.as_ref().map_or("-".to_string(), |v| v.total.to_string());
        for r in &self.instances {
            let _ = write!(
                s,
                "{:>6} {:>6} {:>6} | {:>14} {:>14} {:>14}",
                r.index,
                r.n_vias,
                r.n_potential_hotspots,
                cell(&r.optimal_aware),
                cell(&r.unaware),
                cell(&r.cover_unaware)
            );
            if let Some(why) = &r.skipped {
                let _ = write!(s, "  skipped: {why}");
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "{:>20} | {:>14} {:>14} {:>14}",
            "total", self.optimal_aware.total, self.unaware.total, self.cover_unaware.total
        );
        match self.ratios {
            Some([a, b, c]) => {
                let _ = writeln!(s, "{:>20} | {a:>14.2} {b:>14.2} {c:>14.2}", "ratio");
            }
            None => {
                let _ = writeln!(s, "{:>20} | n/a (optimal-aware total is 0)", "ratio");
            }
        }
        if let Some([a, b, c]) = self.reference_ratios {
            let _ = writeln!(
                s,
                "{:>20} | {a:>14.2} {b:>14.2} {c:>14.2}",
                "reference ratio"
            );
        }
        match self.gap_closure {
            Some(g) => {
                let _ = writeln!(s, "gap closed by cover: {:.1}%", 100.0 * g);
            }
            None => {
                let _ = writeln!(s, "gap closed by cover: n/a (no gap)");
            }
        }
        let _ = writeln!(
            s,
            "evaluated {} of {} instances, {} soundness exceptions",
            self.evaluated,
            self.instances.len(),
            self.soundness_exceptions
        );
        s
    }
}

fn largest(graph: &LayoutGraph) -> usize {
    graph.components().iter().map(Vec::len).max().unwrap_or(0)
}

fn solve_and_verify(
    graph: &LayoutGraph,
    phs: &[PotentialHotspot],
    mode: SolveMode,
    library: &HotspotLibrary,
) -> Result<(Decomposition, ViolationReport)> {
    let d = decompose_with_hotspots(graph, phs, mode)?;
    let r = verify(graph.layout(), &d, graph.tech(), library)?;
    Ok((d, r))
}

/// Runs the three flows on one layout graph.
pub fn run_instance(
    graph: &LayoutGraph,
    library: &HotspotLibrary,
    exact_limit: usize,
) -> Result<InstanceResult> {
    let mut row = InstanceResult {
        index: 0,
        seed: 0,
        n_vias: graph.layout().len(),
        n_potential_hotspots: 0,
        skipped: None,
        optimal_aware: None,
        unaware: None,
        cover_unaware: None,
        n_chosen: 0,
        honored: 0,
        soundness_exceptions: 0,
    };
    if largest(graph) > exact_limit {
        row.skipped = Some(format!(
            "component of {} vias exceeds exact limit",
            largest(graph)
        ));
        return Ok(row);
    }
    let phs = find_potential_hotspots(graph, library);
    row.n_potential_hotspots = phs.len();
    let coupled = solve_units(graph, &phs, true)
        .iter()
        .map(|u| u.0.len())
        .max()
        .unwrap_or(0);
    if coupled > exact_limit {
        row.skipped = Some(format!(
            "hotspot-coupled unit of {coupled} vias exceeds exact limit"
        ));
        return Ok(row);
    }

    let candidates = enumerate_eliminators(&phs, graph);
    let cover = greedy_cover(phs.len(), &candidates)?;
    let covered_graph = apply_eliminators(graph, &cover)?;
    if largest(&covered_graph) > exact_limit {
        row.skipped = Some(format!(
            "component of {} vias after cover exceeds exact limit",
            largest(&covered_graph)
        ));
        return Ok(row);
    }

    let aware = SolveMode::aware().with_exact_limit(exact_limit);
    let unaware = SolveMode::unaware().with_exact_limit(exact_limit);
    let (_, ra) = solve_and_verify(graph, &phs, aware, library)?;
    let (_, rb) = solve_and_verify(graph, &phs, unaware, library)?;
    let (dc, rc) = solve_and_verify(&covered_graph, &phs, unaware, library)?;

    // Every hotspot killed by an eliminator the decomposition honors must be
    // absent from the realized list.
    let realized: HashSet<(&str, Origin)> = rc
        .hotspots
        .iter()
        .map(|h| (h.pattern_id.as_str(), h.origin))
        .collect();
    let assign = dc.dense_assignment(graph.layout().len());
    for chosen in &cover.chosen {
        let honored = match &chosen.kind {
            EliminatorKind::Conflict { a, b } => match (assign[*a], assign[*b]) {
                (Some((_, ma)), Some((_, mb))) => ma != mb,
                _ => false,
            },
            EliminatorKind::Affinity { group } => {
                let key = group.key();
                dc.groups.iter().any(|g| g.vias == key)
            }
        };
        if !honored {
            continue;
        }
        row.honored += 1;
        let covers = &candidates[chosen.id].covers;
        row.soundness_exceptions += covers
            .iter()
            .filter(|&&h| realized.contains(&(phs[h].pattern_id.as_str(), phs[h].origin)))
            .count();
    }

    row.n_chosen = cover.chosen.len();
    row.optimal_aware = Some(Violations::of(&ra));
    row.unaware = Some(Violations::of(&rb));
    row.cover_unaware = Some(Violations::of(&rc));
    Ok(row)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    let library = gen_random_patterns(&spec.patterns, &spec.tech)?;
    let rows = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let grid = GridSpec { seed, ..spec.grid };
            let layout = Arc::new(gen_random_layout(&grid, &spec.tech)?);
            let graph = build_graph(layout, &spec.tech)?;
            let mut row = run_instance(&graph, &library, spec.exact_limit)?;
            row.index = i;
            row.seed = seed;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(rows, &spec.tech))
}

pub fn summarize(instances: Vec<InstanceResult>, tech: &TechParams) -> ExperimentTable {
    let mut a = Violations::default();
    let mut b = Violations::default();
    let mut c = Violations::default();
    let mut evaluated = 0;
    let mut exceptions = 0;
    for r in &instances {
        if let (Some(ra), Some(rb), Some(rc)) = (&r.optimal_aware, &r.unaware, &r.cover_unaware) {
            a.add(ra);
            b.add(rb);
            c.add(rc);
            evaluated += 1;
            exceptions += r.soundness_exceptions;
        }
    }
    let ratios = (a.total > 0).then(|| {
        let base = a.total as f64;
        [1.0, b.total as f64 / base, c.total as f64 / base]
    });
    let gap_closure = (b.total != a.total)
        .then(|| (b.total as f64 - c.total as f64) / (b.total as f64 - a.total as f64));
    ExperimentTable {
        max_g: tech.max_g,
        num_masks: tech.num_masks,
        skipped: instances.len() - evaluated,
        instances,
        evaluated,
        optimal_aware: a,
        unaware: b,
        cover_unaware: c,
        ratios,
        gap_closure,
        reference_ratios: REFERENCE_RATIOS
            .iter()
            .find(|(g, _)| *g == tech.max_g)
            .map(|(_, r)| *r),
        soundness_exceptions: exceptions,
    }
}
