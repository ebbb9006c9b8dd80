//! Seeded instance generators.

use std::collections::BTreeMap;

use dsa_hotspot::hotspot::{Offset, Window};
use dsa_hotspot::matcher::EliminatorState;
use dsa_hotspot::{
    gen_random_layout, Eliminator, EliminatorKind, GridSpec, GroupEdge, HotspotLibrary,
    HotspotPattern, Layout, TechParams, ViaId,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random candidates over `universe` hotspots: a mix of conflict pairs and
/// 2-3 via templates drawn from `n_vias` vias, ids in canonical order.
pub fn random_eliminators(
    seed: u64,
    universe: usize,
    n_sets: usize,
    n_vias: usize,
) -> Vec<Eliminator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_key: BTreeMap<(u8, Vec<ViaId>), (EliminatorKind, Vec<usize>)> = BTreeMap::new();
    let n_vias = n_vias.max(3);
    let mut attempts = 0;
    while by_key.len() < n_sets && attempts < n_sets * 20 {
        attempts += 1;
        let kind = if rng.gen_bool(0.5) {
            let a = rng.gen_range(0..n_vias);
            let b = rng.gen_range(0..n_vias);
            if a == b {
                continue;
            }
            EliminatorKind::Conflict {
                a: a.min(b),
                b: a.max(b),
            }
        } else {
            let len = rng.gen_range(2..=3);
            let mut vias: Vec<ViaId> = (0..n_vias).collect();
            vias.shuffle(&mut rng);
            vias.truncate(len);
            EliminatorKind::Affinity {
                group: GroupEdge::new(vias),
            }
        };
        if universe == 0 {
            by_key.insert(kind.canonical_key(), (kind, Vec::new()));
            continue;
        }
        let size = rng.gen_range(1..=universe.min(30));
        let mut covers: Vec<usize> = (0..size).map(|_| rng.gen_range(0..universe)).collect();
        covers.sort_unstable();
        covers.dedup();
        by_key.insert(kind.canonical_key(), (kind, covers));
    }
    by_key
        .into_values()
        .enumerate()
        .map(|(id, (kind, covers))| Eliminator {
            id,
            kind,
            covers,
            state: EliminatorState::Live,
        })
        .collect()
}

/// The doubling-column family: `2 * half` elements in two rows; each row is
/// one template candidate, and column blocks of width `half/2, half/4, ...,
/// 1, 1` are conflict candidates. Greedy takes every block (ties go to
/// conflicts) while the two rows suffice.
///
/// Returns `(universe, candidates, greedy sequence, optimal cover)`.
pub fn doubling_family(half: usize) -> (usize, Vec<Eliminator>, Vec<usize>, Vec<usize>) {
    assert!(
        half.is_power_of_two() && half >= 2,
        "half must be a power of two >= 2"
    );
    let universe = 2 * half;
    let mut widths = Vec::new();
    let mut w = half / 2;
    while w >= 1 {
        widths.push(w);
        w /= 2;
    }
    widths.push(1);

    let mut candidates = Vec::new();
    let mut col = 0;
    for (i, &w) in widths.iter().enumerate() {
        let covers: Vec<usize> = (col..col + w).flat_map(|c| [c, half + c]).collect();
        let mut covers = covers;
        covers.sort_unstable();
        candidates.push(Eliminator {
            id: i,
            kind: EliminatorKind::Conflict {
                a: 100 + 2 * i,
                b: 101 + 2 * i,
            },
            covers,
            state: EliminatorState::Live,
        });
        col += w;
    }
    let greedy: Vec<usize> = (0..widths.len()).collect();
    let mut optimum = Vec::new();
    for r in 0..2 {
        let id = candidates.len();
        optimum.push(id);
        candidates.push(Eliminator {
            id,
            kind: EliminatorKind::Affinity {
                group: GroupEdge::new(vec![2 * r, 2 * r + 1]),
            },
            covers: (r * half..(r + 1) * half).collect(),
            state: EliminatorState::Live,
        });
    }
    (universe, candidates, greedy, optimum)
}

/// Gridded layout with random size and density.
pub fn random_gridded(
    seed: u64,
    max_rows: usize,
    max_cols: usize,
    pitch_x: i64,
    pitch_y: i64,
    tech: &TechParams,
) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec {
        seed: rng.gen(),
        rows: rng.gen_range(1..=max_rows),
        cols: rng.gen_range(1..=max_cols),
        pitch_x,
        pitch_y,
        density: rng.gen_range(0.2..0.9),
    };
    gen_random_layout(&spec, tech).expect("legal grid pitches")
}

/// Up to `max_vias` distinct vias on a 15 nm lattice inside a box small
/// enough that most of them interact.
pub fn random_small_layout(seed: u64, max_vias: usize, tech: &TechParams) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vias);
    let span = rng.gen_range(4..=10);
    let mut cells: Vec<(i64, i64)> = (0..span)
        .flat_map(|x| (0..span).map(move |y| (x, y)))
        .collect();
    cells.shuffle(&mut rng);
    let step = tech.min_group_pitch().max(tech.min_pitch_diff_mask);
    let pts: Vec<(i64, i64)> = cells
        .into_iter()
        .take(n)
        .map(|(x, y)| (x * step, y * step))
        .collect();
    Layout::from_points(pts).expect("distinct lattice points")
}

/// Library of up to `count` patterns cut out of `layout`: random via
/// subsets with random legal segments and a slightly padded window, so that
/// most of them occur at least once.
pub fn library_from_layout(
    seed: u64,
    layout: &Layout,
    count: usize,
    tech: &TechParams,
) -> HotspotLibrary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patterns = Vec::new();
    let n = layout.len();
    if n == 0 {
        return HotspotLibrary::empty(tech);
    }
    for i in 0..count {
        let size = rng.gen_range(1..=n.min(4));
        let mut ids: Vec<ViaId> = (0..n).collect();
        ids.shuffle(&mut rng);
        ids.truncate(size);
        let pts: Vec<(i64, i64)> = ids
            .iter()
            .map(|&v| (layout.vias()[v].x, layout.vias()[v].y))
            .collect();
        let x0 = pts.iter().map(|p| p.0).min().unwrap() - rng.gen_range(0..=20);
        let y0 = pts.iter().map(|p| p.1).min().unwrap() - rng.gen_range(0..=20);
        let x1 = pts.iter().map(|p| p.0).max().unwrap() + rng.gen_range(0..=20);
        let y1 = pts.iter().map(|p| p.1).max().unwrap() + rng.gen_range(0..=20);
        let offsets: Vec<Offset> = pts
            .iter()
            .map(|&(x, y)| Offset {
                dx: x - x0,
                dy: y - y0,
            })
            .collect();

        // Pair up offsets that form a legal two-via segment, at random.
        let mut free: Vec<usize> = (0..size).collect();
        free.shuffle(&mut rng);
        let mut segments = Vec::new();
        let mut nodes = Vec::new();
        while let Some(a) = free.pop() {
            let partner = free.iter().position(|&b| {
                let (p, q) = (offsets[a], offsets[b]);
                let gap = (p.dx - q.dx).abs() + (p.dy - q.dy).abs();
                let collinear = p.dx == q.dx || p.dy == q.dy;
                let blocked = offsets.iter().enumerate().any(|(c, o)| {
                    c != a
                        && c != b
                        && ((p.dx == q.dx
                            && o.dx == p.dx
                            && o.dy > p.dy.min(q.dy)
                            && o.dy < p.dy.max(q.dy))
                            || (p.dy == q.dy
                                && o.dy == p.dy
                                && o.dx > p.dx.min(q.dx)
                                && o.dx < p.dx.max(q.dx)))
                });
                collinear && !blocked && tech.max_g >= 2 && tech.is_group_gap(gap)
            });
            match partner {
                Some(j) if rng.gen_bool(0.6) => {
                    let b = free.remove(j);
                    segments.push(vec![a.min(b), a.max(b)]);
                }
                _ => nodes.push(a),
            }
        }
        nodes.sort_unstable();
        patterns.push(HotspotPattern {
            id: format!("cut{i}"),
            window: Window {
                w: x1 - x0,
                h: y1 - y0,
            },
            offsets,
            segments,
            nodes,
        });
    }
    // Distinct ids are guaranteed; drop any pattern that fails validation.
    let patterns: Vec<HotspotPattern> = patterns
        .into_iter()
        .filter(|p| p.validate(tech).is_ok())
        .collect();
    HotspotLibrary::new(patterns, tech).expect("validated patterns")
}

/// Four vias a=(0,0), b=(0,45), c=(90,45), d=(90,0) and one pattern: a
/// vertical a-b segment plus node d in a 90x45 window, so c is the lone
/// non-constituent.
pub fn micro_instance(tech: &TechParams) -> (Layout, HotspotLibrary) {
    let layout =
        Layout::from_points([(0, 0), (0, 45), (90, 45), (90, 0)]).expect("distinct points");
    let pattern = HotspotPattern {
        id: "micro".into(),
        window: Window { w: 90, h: 45 },
        offsets: vec![
            Offset { dx: 0, dy: 0 },
            Offset { dx: 0, dy: 45 },
            Offset { dx: 90, dy: 0 },
        ],
        segments: vec![vec![0, 1]],
        nodes: vec![2],
    };
    let lib = HotspotLibrary::new(vec![pattern], tech).expect("valid pattern");
    (layout, lib)
}
