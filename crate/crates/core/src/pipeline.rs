//! End-to-end flow: graph, detection, cover, decomposition, audit.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cover::{apply_eliminators, greedy_cover, CoverResult};
use crate::decompose::{
    decompose_with_hotspots, Decomposition, DecompositionMeta, SolveMode, DEFAULT_EXACT_LIMIT,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, LayoutGraph};
use crate::hotspot::{
    gen_random_patterns, load_library, save_library, HotspotLibrary, PatternGenSpec,
};
use crate::layout::{gen_random_layout, load_layout, save_layout, GridSpec, Layout, LayoutFormat};
use crate::matcher::{
    enumerate_eliminators, find_potential_hotspots, DetectionDump, PotentialHotspot,
};
use crate::render::render_svg;
use crate::tech::TechParams;
use crate::verify::{verify, ViolationReport};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "DSAHS_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Exact/heuristic decomposition with hotspots in the objective.
    #[serde(rename = "aware")]
    Aware,
    /// Decomposition that ignores the library.
    #[serde(rename = "unaware")]
    Unaware,
    /// Greedy cover pre-processing, then hotspot-unaware decomposition.
    #[serde(rename = "cover+unaware")]
    CoverUnaware,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Aware => "aware",
            Mode::Unaware => "unaware",
            Mode::CoverUnaware => "cover+unaware",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aware" => Ok(Mode::Aware),
            "unaware" => Ok(Mode::Unaware),
            "cover+unaware" | "cover" => Ok(Mode::CoverUnaware),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutSource {
    Path(PathBuf),
    Generate(GridSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LibrarySource {
    Path(PathBuf),
    Generate(PatternGenSpec),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub layout: LayoutSource,
    pub library: LibrarySource,
    pub tech: TechParams,
    pub mode: Mode,
    pub exact_limit: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Where artifacts are written; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            layout: LayoutSource::Generate(GridSpec::default()),
            library: LibrarySource::Generate(PatternGenSpec::default()),
            tech: TechParams::default(),
            mode: Mode::CoverUnaware,
            exact_limit: DEFAULT_EXACT_LIMIT,
            threads: None,
            out_dir: None,
            svg: false,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    /// Config named by [`CONFIG_ENV`], or defaults when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tech.validate()?;
        if self.exact_limit == 0 {
            return Err(Error::InvalidGenerator(
                "exact_limit must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidGenerator("threads must be at least 1".into()));
        }
        for p in [
            match &self.layout {
                LayoutSource::Path(p) => Some(p),
                _ => None,
            },
            match &self.library {
                LibrarySource::Path(p) => Some(p),
                _ => None,
            },
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::io(
                    p.clone(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file does not exist"),
                ));
            }
        }
        Ok(())
    }

    pub fn solve_mode(&self) -> SolveMode {
        let base = match self.mode {
            Mode::Aware => SolveMode::aware(),
            Mode::Unaware | Mode::CoverUnaware => SolveMode::unaware(),
        };
        base.with_exact_limit(self.exact_limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Deterministic summary of a run. Wall-clock data lives in
/// [`RunOutput::timings`] so that repeated runs compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub tech: TechParams,
    pub n_vias: usize,
    pub n_components: usize,
    pub largest_component: usize,
    pub n_potential_hotspots: usize,
    pub n_candidates: usize,
    pub n_chosen: usize,
    pub n_residual: usize,
    pub cover_stats: Option<crate::cover::CoverStats>,
    pub decomposition: DecompositionMeta,
    pub violations: ViolationReport,
}

impl RunReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub layout: Arc<Layout>,
    pub library: HotspotLibrary,
    /// Graph the decomposition was solved on (after eliminators, if any).
    pub graph: LayoutGraph,
    pub hotspots: Vec<PotentialHotspot>,
    pub cover: Option<CoverResult>,
    pub decomposition: Decomposition,
    pub report: RunReport,
    pub timings: Vec<StageTiming>,
}

impl RunOutput {
    pub fn timing(&self, stage: &str) -> Option<f64> {
        self.timings
            .iter()
            .find(|t| t.stage == stage)
            .map(|t| t.seconds)
    }
}

struct Clock(Vec<StageTiming>);

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }
}

pub fn load_layout_source(src: &LayoutSource, tech: &TechParams) -> Result<Layout> {
    match src {
        LayoutSource::Path(p) => load_layout(p, LayoutFormat::from_path(p)),
        LayoutSource::Generate(spec) => gen_random_layout(spec, tech),
    }
}

pub fn load_library_source(src: &LibrarySource, tech: &TechParams) -> Result<HotspotLibrary> {
    match src {
        LibrarySource::Path(p) => load_library(p, tech),
        LibrarySource::Generate(spec) => gen_random_patterns(spec, tech),
        LibrarySource::Empty => Ok(HotspotLibrary::empty(tech)),
    }
}

/// Runs the whole flow, inside a dedicated pool when `threads` is set.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidGenerator(format!("thread pool: {e}")))?;
            pool.install(|| run_stages(config))
        }
        None => run_stages(config),
    }
}

fn run_stages(config: &RunConfig) -> Result<RunOutput> {
    let tech = &config.tech;
    let mut clock = Clock(Vec::new());

    let layout = Arc::new(clock.time("load_layout", || load_layout_source(&config.layout, tech))?);
    let library = clock.time("load_library", || {
        load_library_source(&config.library, tech)
    })?;
    let graph = clock.time("build_graph", || build_graph(layout.clone(), tech))?;
    let hotspots = clock.time("detect", || Ok(find_potential_hotspots(&graph, &library)))?;

    let (candidates, cover, solve_graph) = if config.mode == Mode::CoverUnaware {
        let candidates = clock.time("eliminators", || {
            Ok(enumerate_eliminators(&hotspots, &graph))
        })?;
        let cover = clock.time("cover", || greedy_cover(hotspots.len(), &candidates))?;
        let applied = clock.time("apply", || apply_eliminators(&graph, &cover))?;
        (candidates, Some(cover), applied)
    } else {
        (Vec::new(), None, graph)
    };

    let mode = config.solve_mode();
    let decomposition = clock.time("decompose", || {
        decompose_with_hotspots(&solve_graph, &hotspots, mode)
    })?;
    let violations = clock
        .time("verify", || verify(&layout, &decomposition, tech, &library))?
        .with_mode(config.mode.as_str());

    let report = RunReport {
        mode: config.mode,
        tech: *tech,
        n_vias: layout.len(),
        n_components: solve_graph.components().len(),
        largest_component: solve_graph
            .components()
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0),
        n_potential_hotspots: hotspots.len(),
        n_candidates: candidates.len(),
        n_chosen: cover.as_ref().map_or(0, |c| c.chosen.len()),
        n_residual: cover.as_ref().map_or(0, |c| c.residual.len()),
        cover_stats: cover.as_ref().map(|c| c.stats.clone()),
        decomposition: decomposition.meta.clone(),
        violations,
    };

    let mut out = RunOutput {
        layout,
        library,
        graph: solve_graph,
        hotspots,
        cover,
        decomposition,
        report,
        timings: Vec::new(),
    };
    if let Some(dir) = &config.out_dir {
        clock.time("write", || {
            write_artifacts(dir, &out, &candidates, config.svg)
        })?;
    }
    out.timings = clock.0;
    if let Some(dir) = &config.out_dir {
        let path = dir.join("timings.json");
        let s = serde_json::to_string_pretty(&out.timings).expect("timings serialize");
        fs::write(&path, s).map_err(|e| Error::io(path, e).in_stage("write"))?;
    }
    Ok(out)
}

fn write_artifacts(
    dir: &Path,
    out: &RunOutput,
    candidates: &[crate::matcher::Eliminator],
    svg: bool,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    };
    save_layout(&out.layout, &dir.join("layout.json"), LayoutFormat::Json)?;
    save_library(&out.library, &dir.join("library.json"))?;
    write("graph.json", to_json(&out.graph.dump()))?;
    let detection = DetectionDump {
        hotspots: out.hotspots.clone(),
        candidates: candidates.to_vec(),
    };
    write("hotspots.json", to_json(&detection))?;
    if let Some(cover) = &out.cover {
        write("cover.json", to_json(cover))?;
    }
    write("decomposition.json", out.decomposition.to_json_string())?;
    write("report.json", out.report.to_json_string())?;
    write("report.txt", out.report.violations.to_text())?;
    if svg {
        let body = render_svg(
            &out.layout,
            &out.decomposition,
            &out.report.violations,
            &out.library,
        );
        write("layout.svg", body)?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> RunConfig {
        RunConfig {
            layout: LayoutSource::Generate(GridSpec {
                seed: 7,
                rows: 10,
                cols: 10,
                density: 0.35,
                ..GridSpec::default()
            }),
            mode,
            ..RunConfig::default()
        }
    }

    #[test]
    fn runs_every_mode() {
        for mode in [Mode::Aware, Mode::Unaware, Mode::CoverUnaware] {
            let out = run_pipeline(&small(mode)).unwrap();
            let v = &out.report.violations;
            assert_eq!(v.n_violations, v.n_conflicts + v.n_hotspots);
            assert_eq!(out.report.cover_stats.is_some(), mode == Mode::CoverUnaware);
        }
    }

    #[test]
    fn cover_stage_is_timed() {
        let out = run_pipeline(&small(Mode::CoverUnaware)).unwrap();
        assert!(out.timing("cover").is_some());
        assert!(out.timing("decompose").is_some());
    }

    #[test]
    fn mode_names_roundtrip() {
        for mode in [Mode::Aware, Mode::Unaware, Mode::CoverUnaware] {
            assert_eq!(mode.as_str().parse::<Mode>().unwrap(), mode);
            let json = serde_json::to_string(&mode).unwrap();
            assert_eq!(json, format!("\"{}\"", mode.as_str()));
        }
        assert!("fast".parse::<Mode>().is_err());
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let mut cfg = small(Mode::Unaware);
        cfg.layout = LayoutSource::Generate(GridSpec {
            pitch_x: 5,
            ..GridSpec::default()
        });
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Stage {
                    stage: "load_layout",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn config_json_uses_defaults_for_missing_fields() {
        let cfg = RunConfig::from_json_str(r#"{"mode":"aware","exact_limit":9}"#).unwrap();
        assert_eq!(cfg.mode, Mode::Aware);
        assert_eq!(cfg.exact_limit, 9);
        assert_eq!(cfg.tech, TechParams::default());
        let back = RunConfig::from_json_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
