//! Hotspot patterns: relative via offsets inside a window, split into
//! segments (multi-via templates) and nodes (singleton templates).

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tech::TechParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Offset {
    pub dx: i64,
    pub dy: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub w: i64,
    pub h: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotspotPattern {
    pub id: String,
    pub window: Window,
    #[serde(rename = "vias")]
    pub offsets: Vec<Offset>,
    pub segments: Vec<Vec<usize>>,
    pub nodes: Vec<usize>,
}

impl HotspotPattern {
    fn invalid(&self, rule: impl Into<String>) -> Error {
        Error::InvalidPattern {
            pattern: self.id.clone(),
            rule: rule.into(),
        }
    }

    pub fn validate(&self, tech: &TechParams) -> Result<()> {
        let n = self.offsets.len();
        if n == 0 {
            return Err(self.invalid("pattern has no vias"));
        }
        if self.window.w < 0 || self.window.h < 0 {
            return Err(self.invalid("negative window extent"));
        }
        let mut seen = HashSet::new();
        for o in &self.offsets {
            if o.dx < 0 || o.dy < 0 || o.dx > self.window.w || o.dy > self.window.h {
                return Err(self.invalid(format!("offset ({}, {}) outside window", o.dx, o.dy)));
            }
            if !seen.insert(*o) {
                return Err(self.invalid(format!("duplicate offset ({}, {})", o.dx, o.dy)));
            }
        }

        let mut used = vec![false; n];
        for &i in self.segments.iter().flatten().chain(&self.nodes) {
            if i >= n {
                return Err(self.invalid(format!("index {i} out of range")));
            }
            if std::mem::replace(&mut used[i], true) {
                return Err(self.invalid(format!("index {i} appears twice in segments/nodes")));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(self.invalid(format!("offset {i} is in neither segments nor nodes")));
        }

        for seg in &self.segments {
            self.validate_segment(seg, tech)?;
        }
        Ok(())
    }

    fn validate_segment(&self, seg: &[usize], tech: &TechParams) -> Result<()> {
        if seg.len() < 2 || seg.len() > tech.max_g {
            return Err(self.invalid(format!(
                "segment {seg:?} has {} vias, allowed 2..={}",
                seg.len(),
                tech.max_g
            )));
        }
        let pts: Vec<Offset> = seg.iter().map(|&i| self.offsets[i]).collect();
        let horizontal = pts.iter().all(|p| p.dy == pts[0].dy);
        let vertical = pts.iter().all(|p| p.dx == pts[0].dx);
        if !horizontal && !vertical {
            return Err(self.invalid(format!("segment {seg:?} is not collinear")));
        }
        let axis = |p: &Offset| if horizontal { p.dx } else { p.dy };
        let mut along: Vec<i64> = pts.iter().map(axis).collect();
        along.sort_unstable();
        for w in along.windows(2) {
            if !tech.is_group_gap(w[1] - w[0]) {
                return Err(self.invalid(format!(
                    "segment {seg:?} gap {} outside [{}, {}]",
                    w[1] - w[0],
                    tech.min_group_pitch(),
                    tech.max_dsa_pitch
                )));
            }
        }
        let (lo, hi) = (along[0], along[along.len() - 1]);
        let blocked = self.offsets.iter().enumerate().any(|(i, p)| {
            !seg.contains(&i)
                && if horizontal {
                    p.dy == pts[0].dy
                } else {
                    p.dx == pts[0].dx
                }
                && axis(p) > lo
                && axis(p) < hi
        });
        if blocked {
            return Err(self.invalid(format!("segment {seg:?} skips over another via")));
        }
        Ok(())
    }

    /// Sorts offsets lexicographically (so the smallest is first) and
    /// remaps segments and nodes to the new indices.
    pub fn normalize(&mut self) {
        let mut order: Vec<usize> = (0..self.offsets.len()).collect();
        order.sort_by_key(|&i| self.offsets[i]);
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        self.offsets = order.iter().map(|&i| self.offsets[i]).collect();
        for seg in &mut self.segments {
            for i in seg.iter_mut() {
                *i = new_index[*i];
            }
            seg.sort_unstable();
        }
        self.segments.sort();
        for i in &mut self.nodes {
            *i = new_index[*i];
        }
        self.nodes.sort_unstable();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotspotLibrary {
    pub tech: TechParams,
    pub patterns: Vec<HotspotPattern>,
}

impl HotspotLibrary {
    /// Normalizes and validates every pattern against `tech`.
    pub fn new(patterns: Vec<HotspotPattern>, tech: &TechParams) -> Result<Self> {
        tech.validate()?;
        let mut ids = HashSet::new();
        let mut out = Vec::with_capacity(patterns.len());
        for mut p in patterns {
            if !ids.insert(p.id.clone()) {
                return Err(Error::InvalidPattern {
                    pattern: p.id,
                    rule: "duplicate pattern id".into(),
                });
            }
            p.validate(tech)?;
            p.normalize();
            out.push(p);
        }
        Ok(HotspotLibrary {
            tech: *tech,
            patterns: out,
        })
    }

    pub fn empty(tech: &TechParams) -> Self {
        HotspotLibrary {
            tech: *tech,
            patterns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Parses a library file; the embedded `tech` block is informational and
    /// patterns are validated against `tech`.
    pub fn from_json_str(s: &str, tech: &TechParams) -> Result<Self> {
        #[derive(Deserialize)]
        struct LibraryFile {
            #[serde(default)]
            #[allow(dead_code)]
            tech: Option<serde_json::Value>,
            patterns: Vec<HotspotPattern>,
        }
        let file: LibraryFile = serde_json::from_str(s)?;
        HotspotLibrary::new(file.patterns, tech)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }
}

pub fn load_library(path: &Path, tech: &TechParams) -> Result<HotspotLibrary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    HotspotLibrary::from_json_str(&text, tech)
}

pub fn save_library(lib: &HotspotLibrary, path: &Path) -> Result<()> {
    fs::write(path, lib.to_json_string()).map_err(|e| Error::io(path, e))
}

/// Parameters of the random cell-grid pattern generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGenSpec {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub cell_pitch_x: i64,
    pub cell_pitch_y: i64,
    pub count: usize,
    /// Bitmaps with fewer occupied cells are redrawn.
    #[serde(default = "one")]
    pub min_vias: usize,
}

fn one() -> usize {
    1
}

impl Default for PatternGenSpec {
    fn default() -> Self {
        PatternGenSpec {
            seed: 1,
            rows: 4,
            cols: 2,
            cell_pitch_x: 70,
            cell_pitch_y: 45,
            count: 36,
            min_vias: 1,
        }
    }
}

/// Generates `count` distinct non-empty patterns over a `rows x cols` cell
/// grid. Vertically adjacent occupied cells are chunked into segments of at
/// most `max_g` vias; everything else becomes a node.
pub fn gen_random_patterns(spec: &PatternGenSpec, tech: &TechParams) -> Result<HotspotLibrary> {
    tech.validate()?;
    let infeasible = |msg: String| Err(Error::InvalidGenerator(msg));
    let cells = spec.rows * spec.cols;
    if spec.rows == 0 || spec.cols == 0 || cells > 24 {
        return infeasible(format!("cell grid {}x{} unsupported", spec.rows, spec.cols));
    }
    if spec.cell_pitch_x < tech.min_pitch_diff_mask || spec.cell_pitch_y < tech.min_pitch_diff_mask
    {
        return infeasible("cell pitch below min_pitch_diff_mask".into());
    }
    if spec.rows > 1 && !tech.is_group_gap(spec.cell_pitch_y) {
        return infeasible(format!(
            "cell_pitch_y {} is not a legal template pitch",
            spec.cell_pitch_y
        ));
    }
    let available = (0u32..1 << cells)
        .filter(|b| b.count_ones() as usize >= spec.min_vias.max(1))
        .count();
    if spec.count > available {
        return infeasible(format!(
            "{} distinct patterns requested but only {available} exist",
            spec.count
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen = HashSet::new();
    let mut patterns = Vec::with_capacity(spec.count);
    while patterns.len() < spec.count {
        let bits: u32 = (0..cells).fold(0, |acc, i| acc | (u32::from(rng.gen_bool(0.5)) << i));
        if (bits.count_ones() as usize) < spec.min_vias.max(1) || !seen.insert(bits) {
            continue;
        }
        let p = pattern_from_bits(format!("h{}", patterns.len() + 1), bits, spec, tech);
        debug_assert!(p.validate(tech).is_ok());
        patterns.push(p);
    }
    HotspotLibrary::new(patterns, tech)
}

fn pattern_from_bits(
    id: String,
    bits: u32,
    spec: &PatternGenSpec,
    tech: &TechParams,
) -> HotspotPattern {
    let occupied = |r: usize, c: usize| bits >> (r * spec.cols + c) & 1 == 1;
    let mut offsets = Vec::new();
    let mut segments = Vec::new();
    let mut nodes = Vec::new();
    for c in 0..spec.cols {
        let mut r = 0;
        while r < spec.rows {
            if !occupied(r, c) {
                r += 1;
                continue;
            }
            let start = r;
            while r < spec.rows && occupied(r, c) {
                r += 1;
            }
            let run: Vec<usize> = (start..r)
                .map(|row| {
                    offsets.push(Offset {
                        dx: c as i64 * spec.cell_pitch_x,
                        dy: row as i64 * spec.cell_pitch_y,
                    });
                    offsets.len() - 1
                })
                .collect();
            for chunk in run.chunks(tech.max_g) {
                if chunk.len() == 1 {
                    nodes.push(chunk[0]);
                } else {
                    segments.push(chunk.to_vec());
                }
            }
        }
    }
    HotspotPattern {
        id,
        window: Window {
            w: (spec.cols as i64 - 1) * spec.cell_pitch_x,
            h: (spec.rows as i64 - 1) * spec.cell_pitch_y,
        },
        offsets,
        segments,
        nodes,
    }
}
