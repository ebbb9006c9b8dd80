//! Via layouts: ingestion, validation, spatial lookup and synthetic generation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tech::TechParams;

/// Largest accepted coordinate. Keeps squared distances well inside `i64`.
pub const MAX_COORD: i64 = 1 << 30;

pub type ViaId = usize;

/// A via center in integer nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Via {
    pub id: ViaId,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutFormat {
    Json,
    Csv,
}

impl LayoutFormat {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LayoutFormat::Csv,
            _ => LayoutFormat::Json,
        }
    }
}

/// An ordered set of vias with dense ids `0..n` and distinct coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    vias: Vec<Via>,
}

#[derive(Serialize, Deserialize)]
struct LayoutFile {
    units: String,
    vias: Vec<PointRecord>,
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    x: i64,
    y: i64,
}

impl Layout {
    /// Builds a layout from points in order, assigning ids `0..n`.
    pub fn from_points<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, i64)>,
    {
        let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
        let mut vias = Vec::new();
        for (index, (x, y)) in points.into_iter().enumerate() {
            if !(0..=MAX_COORD).contains(&x) || !(0..=MAX_COORD).contains(&y) {
                return Err(Error::CoordinateOutOfRange {
                    index,
                    x,
                    y,
                    max: MAX_COORD,
                });
            }
            if let Some(&first) = seen.get(&(x, y)) {
                return Err(Error::DuplicateCoordinate {
                    x,
                    y,
                    first,
                    second: index,
                });
            }
            seen.insert((x, y), index);
            vias.push(Via { id: index, x, y });
        }
        Ok(Layout { vias })
    }

    pub fn vias(&self) -> &[Via] {
        &self.vias
    }

    pub fn via(&self, id: ViaId) -> Option<&Via> {
        self.vias.get(id)
    }

    pub fn len(&self) -> usize {
        self.vias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vias.is_empty()
    }

    pub fn bbox(&self) -> Option<BBox> {
        let first = self.vias.first()?;
        let mut b = BBox {
            x0: first.x,
            y0: first.y,
            x1: first.x,
            y1: first.y,
        };
        for v in &self.vias[1..] {
            b.x0 = b.x0.min(v.x);
            b.y0 = b.y0.min(v.y);
            b.x1 = b.x1.max(v.x);
            b.y1 = b.y1.max(v.y);
        }
        Some(b)
    }

    /// Squared center distance between two vias.
    pub fn dist_sq(&self, a: ViaId, b: ViaId) -> i64 {
        dist_sq(&self.vias[a], &self.vias[b])
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: LayoutFile = serde_json::from_str(s)?;
        if file.units != "nm" {
            return Err(Error::Parse(format!(
                "unsupported units `{}`, expected `nm`",
                file.units
            )));
        }
        Layout::from_points(file.vias.into_iter().map(|p| (p.x, p.y)))
    }

    pub fn to_json_string(&self) -> String {
        let file = LayoutFile {
            units: "nm".into(),
            vias: self
                .vias
                .iter()
                .map(|v| PointRecord { x: v.x, y: v.y })
                .collect(),
        };
        serde_json::to_string(&file).expect("layout serializes")
    }

    /// Parses `x,y` lines. A first line that is not numeric is taken as a header.
    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(s.as_bytes());
        let mut points = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "csv row {} has {} fields, expected 2",
                    row + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<i64>(), record[1].parse::<i64>());
            match parsed {
                (Ok(x), Ok(y)) => points.push((x, y)),
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "csv row {}: cannot parse `{},{}` as integers",
                        row + 1,
                        &record[0],
                        &record[1]
                    )))
                }
            }
        }
        Layout::from_points(points)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x,y\n");
        for v in &self.vias {
            out.push_str(&format!("{},{}\n", v.x, v.y));
        }
        out
    }
}

pub fn load_layout(path: &Path, format: LayoutFormat) -> Result<Layout> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        LayoutFormat::Json => Layout::from_json_str(&text),
        LayoutFormat::Csv => Layout::from_csv_str(&text),
    }
}

pub fn save_layout(layout: &Layout, path: &Path, format: LayoutFormat) -> Result<()> {
    let text = match format {
        LayoutFormat::Json => layout.to_json_string(),
        LayoutFormat::Csv => layout.to_csv_string(),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[inline]
pub(crate) fn dist_sq(a: &Via, b: &Via) -> i64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// A via pair that violates the hard spacing floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingViolation {
    pub a: ViaId,
    pub b: ViaId,
    pub distance: f64,
}

impl std::fmt::Display for SpacingViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "vias {} and {} are {:.2} nm apart",
            self.a, self.b, self.distance
        )
    }
}

/// Lists every pair closer than `min_pitch_diff_mask`, sorted by `(a, b)`.
pub fn validate_layout(layout: &Layout, tech: &TechParams) -> Vec<SpacingViolation> {
    let index = SpatialIndex::new(layout, tech.min_pitch_diff_mask);
    index
        .pairs_within(tech.diff_mask_sq())
        .into_iter()
        .map(|(a, b)| SpacingViolation {
            a,
            b,
            distance: (layout.dist_sq(a, b) as f64).sqrt(),
        })
        .collect()
}

/// Uniform bucket grid over via centers.
pub struct SpatialIndex<'a> {
    layout: &'a Layout,
    cell: i64,
    buckets: HashMap<(i64, i64), Vec<ViaId>>,
}

impl<'a> SpatialIndex<'a> {
    pub fn new(layout: &'a Layout, cell: i64) -> Self {
        let cell = cell.max(1);
        let mut buckets: HashMap<(i64, i64), Vec<ViaId>> = HashMap::new();
        for v in layout.vias() {
            buckets
                .entry((v.x / cell, v.y / cell))
                .or_default()
                .push(v.id);
        }
        SpatialIndex {
            layout,
            cell,
            buckets,
        }
    }

    /// All pairs `(a, b)`, `a < b`, with squared distance strictly below `limit_sq`.
    /// Requires `limit_sq <= cell^2`.
    pub fn pairs_within(&self, limit_sq: i64) -> Vec<(ViaId, ViaId)> {
        debug_assert!(limit_sq <= self.cell * self.cell);
        let mut out = Vec::new();
        for v in self.layout.vias() {
            let (cx, cy) = (v.x / self.cell, v.y / self.cell);
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    let Some(bucket) = self.buckets.get(&(gx, gy)) else {
                        continue;
                    };
                    for &u in bucket {
                        if u > v.id && self.layout.dist_sq(v.id, u) < limit_sq {
                            out.push((v.id, u));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Vias whose centers lie in the closed rectangle, sorted by id.
    pub fn in_rect(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<ViaId> {
        let mut out = Vec::new();
        if x1 < 0 || y1 < 0 {
            return out;
        }
        let (gx0, gy0) = (x0.max(0) / self.cell, y0.max(0) / self.cell);
        let (gx1, gy1) = (x1 / self.cell, y1 / self.cell);
        for gx in gx0..=gx1 {
            for gy in gy0..=gy1 {
                if let Some(bucket) = self.buckets.get(&(gx, gy)) {
                    for &u in bucket {
                        let v = &self.layout.vias()[u];
                        if v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1 {
                            out.push(u);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Parameters of the gridded random layout generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub pitch_x: i64,
    pub pitch_y: i64,
    pub density: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            seed: 1,
            rows: 10,
            cols: 10,
            pitch_x: 70,
            pitch_y: 45,
            density: 0.5,
        }
    }
}

/// Places vias on a `rows x cols` grid, each cell occupied independently
/// with probability `density`. Vias are numbered row-major.
pub fn gen_random_layout(spec: &GridSpec, tech: &TechParams) -> Result<Layout> {
    if spec.pitch_x < tech.min_pitch_diff_mask || spec.pitch_y < tech.min_pitch_diff_mask {
        return Err(Error::InvalidGenerator(format!(
            "pitches ({}, {}) must be at least min_pitch_diff_mask ({})",
            spec.pitch_x, spec.pitch_y, tech.min_pitch_diff_mask
        )));
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidGenerator(format!(
            "density {} outside (0, 1]",
            spec.density
        )));
    }
    let span_x = (spec.cols as i64).saturating_mul(spec.pitch_x);
    let span_y = (spec.rows as i64).saturating_mul(spec.pitch_y);
    if span_x > MAX_COORD || span_y > MAX_COORD {
        return Err(Error::InvalidGenerator(
            "grid exceeds coordinate range".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::new();
    for r in 0..spec.rows as i64 {
        for c in 0..spec.cols as i64 {
            if rng.gen_bool(spec.density) {
                points.push((c * spec.pitch_x, r * spec.pitch_y));
            }
        }
    }
    Layout::from_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_load_assigns_dense_ids() {
        let l = Layout::from_json_str(
            r#"{"units":"nm","vias":[{"x":0,"y":0},{"x":100,"y":0},{"x":0,"y":45}]}"#,
        )
        .unwrap();
        let ids: Vec<_> = l.vias().iter().map(|v| v.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(l.via(2).unwrap().y, 45);
    }

    #[test]
    fn duplicate_coordinates_rejected() {
        let err = Layout::from_json_str(
            r#"{"units":"nm","vias":[{"x":5,"y":7},{"x":1,"y":1},{"x":5,"y":7}]}"#,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::DuplicateCoordinate {
                first: 0,
                second: 2,
                ..
            }
        ));
    }

    #[test]
    fn negative_and_huge_coordinates_rejected() {
        assert!(matches!(
            Layout::from_points([(0, 0), (-1, 3)]),
            Err(Error::CoordinateOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            Layout::from_points([(MAX_COORD + 1, 0)]),
            Err(Error::CoordinateOutOfRange { .. })
        ));
        assert!(Layout::from_json_str(r#"{"units":"nm","vias":[{"x":1e30,"y":0}]}"#).is_err());
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        assert!(matches!(Layout::from_json_str("{"), Err(Error::Parse(_))));
        assert!(matches!(
            Layout::from_json_str(r#"{"units":"um","vias":[]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Layout::from_csv_str("x,y\n1,2,3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Layout::from_csv_str("1,2\nfoo,3\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn csv_header_optional() {
        let a = Layout::from_csv_str("x,y\n0,0\n40,0\n").unwrap();
        let b = Layout::from_csv_str("0,0\n40, 0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn validate_flags_pairs_below_floor() {
        let tech = TechParams::default();
        let close = Layout::from_points([(0, 0), (9, 0)]).unwrap();
        let errs = validate_layout(&close, &tech);
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].a, errs[0].b), (0, 1));
        assert!((errs[0].distance - 9.0).abs() < 1e-12);

        let boundary = Layout::from_points([(0, 0), (10, 0)]).unwrap();
        assert!(validate_layout(&boundary, &tech).is_empty());
        assert!(validate_layout(&Layout::default(), &tech).is_empty());
    }

    #[test]
    fn full_density_fills_grid() {
        let tech = TechParams::default();
        let spec = GridSpec {
            rows: 2,
            cols: 2,
            density: 1.0,
            ..GridSpec::default()
        };
        let l = gen_random_layout(&spec, &tech).unwrap();
        assert_eq!(l.len(), 4);
        assert_eq!(
            l.bbox().unwrap(),
            BBox {
                x0: 0,
                y0: 0,
                x1: 70,
                y1: 45
            }
        );
    }

    #[test]
    fn generator_rejects_bad_params() {
        let tech = TechParams::default();
        for spec in [
            GridSpec {
                density: 0.0,
                ..GridSpec::default()
            },
            GridSpec {
                density: 1.5,
                ..GridSpec::default()
            },
            GridSpec {
                pitch_x: 5,
                ..GridSpec::default()
            },
        ] {
            assert!(matches!(
                gen_random_layout(&spec, &tech),
                Err(Error::InvalidGenerator(_))
            ));
        }
    }

    #[test]
    fn generator_count_is_binomial() {
        // Binomial(10000, 0.3): mean 3000, sigma = sqrt(10000 * 0.3 * 0.7) ~= 45.83.
        let tech = TechParams::default();
        let spec = GridSpec {
            seed: 1,
            rows: 100,
            cols: 100,
            density: 0.3,
            ..GridSpec::default()
        };
        let n = gen_random_layout(&spec, &tech).unwrap().len() as f64;
        let sigma = (10000.0f64 * 0.3 * 0.7).sqrt();
        assert!((n - 3000.0).abs() <= 5.0 * sigma, "count {n}");
    }

    #[test]
    fn generator_is_byte_reproducible() {
        let tech = TechParams::default();
        let spec = GridSpec {
            seed: 99,
            rows: 30,
            cols: 30,
            ..GridSpec::default()
        };
        let a = gen_random_layout(&spec, &tech).unwrap().to_json_string();
        let b = gen_random_layout(&spec, &tech).unwrap().to_json_string();
        assert_eq!(a, b);
    }

    fn brute_pairs(l: &Layout, limit_sq: i64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..l.len() {
            for b in a + 1..l.len() {
                if l.dist_sq(a, b) < limit_sq {
                    out.push((a, b));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn json_and_csv_roundtrip(points in proptest::collection::btree_set((0i64..5000, 0i64..5000), 0..60)) {
            let l = Layout::from_points(points.iter().copied()).unwrap();
            prop_assert_eq!(&Layout::from_json_str(&l.to_json_string()).unwrap(), &l);
            prop_assert_eq!(&Layout::from_csv_str(&l.to_csv_string()).unwrap(), &l);
        }

        #[test]
        fn validate_matches_brute_force(points in proptest::collection::btree_set((0i64..300, 0i64..300), 0..200)) {
            let tech = TechParams::default();
            let l = Layout::from_points(points.iter().copied()).unwrap();
            let got: Vec<_> = validate_layout(&l, &tech).iter().map(|e| (e.a, e.b)).collect();
            prop_assert_eq!(got, brute_pairs(&l, tech.diff_mask_sq()));
        }

        #[test]
        fn in_rect_matches_scan(points in proptest::collection::btree_set((0i64..600, 0i64..600), 0..80),
                                x0 in 0i64..600, y0 in 0i64..600, w in 0i64..300, h in 0i64..300) {
            let l = Layout::from_points(points.iter().copied()).unwrap();
            let idx = SpatialIndex::new(&l, 75);
            let got = idx.in_rect(x0, y0, x0 + w, y0 + h);
            let want: Vec<_> = l.vias().iter()
                .filter(|v| v.x >= x0 && v.x <= x0 + w && v.y >= y0 && v.y <= y0 + h)
                .map(|v| v.id).collect();
            prop_assert_eq!(got, want);
        }
    }
}
