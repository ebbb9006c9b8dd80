use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dsa_hotspot::cover::{apply_eliminators, greedy_cover, CoverResult};
use dsa_hotspot::decompose::{decompose_with_hotspots, Decomposition, SolveMode};
use dsa_hotspot::experiment::{run_experiment, ExperimentSpec};
use dsa_hotspot::hotspot::save_library;
use dsa_hotspot::layout::save_layout;
use dsa_hotspot::matcher::DetectionDump;
use dsa_hotspot::pipeline::{
    run_pipeline, LayoutSource, LibrarySource, Mode, RunConfig, CONFIG_ENV,
};
use dsa_hotspot::render::write_svg;
use dsa_hotspot::verify::verify;
use dsa_hotspot::{
    build_graph, enumerate_eliminators, find_potential_hotspots, gen_random_layout,
    gen_random_patterns, load_layout, load_library, GridSpec, HotspotLibrary, Layout, LayoutFormat,
    LayoutGraph, PatternGenSpec, TechParams,
};
use serde::Serialize;

/// Hotspot-aware DSA grouping and multiple-patterning mask assignment.
#[derive(Parser)]
#[command(name = "dsahs", version)]
struct Cli {
    /// JSON run config supplying defaults; flags override it.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    tech: TechArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TechArgs {
    /// JSON file with technology parameters.
    #[arg(long, global = true)]
    tech: Option<PathBuf>,
    #[arg(long, global = true)]
    masks: Option<usize>,
    #[arg(long = "max-g", global = true)]
    max_g: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Random gridded layout.
    GenLayout {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        pitch_x: Option<i64>,
        #[arg(long)]
        pitch_y: Option<i64>,
        #[arg(long)]
        density: Option<f64>,
        /// `.json` or `.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Random hotspot pattern library.
    GenHotspots {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        cell_pitch_x: Option<i64>,
        #[arg(long)]
        cell_pitch_y: Option<i64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        min_vias: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conflict edges, template candidates and components as JSON.
    BuildGraph {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Potential hotspots and their eliminator candidates.
    Detect {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy set cover over the potential hotspots.
    Cover {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grouping and mask assignment.
    Decompose {
        #[arg(long)]
        layout: PathBuf,
        /// Needed for `--mode aware`.
        #[arg(long)]
        library: Option<PathBuf>,
        /// Cover result whose eliminators are applied first.
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long, default_value = "unaware")]
        mode: Mode,
        #[arg(long)]
        exact_limit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counts unresolved conflicts and realized hotspots.
    Verify {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full flow, writing every artifact to `--out-dir`.
    Run(RunArgs),
    /// Aware / unaware / cover+unaware comparison over seeded instances.
    Experiment {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        exact_limit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG picture of a decomposition.
    Render {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    exact_limit: Option<usize>,
    /// Seed for generated layout and library.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    svg: bool,
}

struct Ctx {
    config: RunConfig,
    tech: TechParams,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(p) if !p.as_os_str().is_empty() => {
                RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))?
            }
            _ => RunConfig::default(),
        };
        let mut tech = config.tech;
        if let Some(p) = &cli.tech.tech {
            let s = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            tech = serde_json::from_str(&s).with_context(|| format!("parsing {}", p.display()))?;
        }
        if let Some(k) = cli.tech.masks {
            tech.num_masks = k;
        }
        if let Some(g) = cli.tech.max_g {
            tech.max_g = g;
        }
        tech.validate()?;
        Ok(Ctx { config, tech })
    }

    fn layout(&self, path: &Path) -> Result<Layout> {
        load_layout(path, LayoutFormat::from_path(path))
            .with_context(|| format!("loading layout {}", path.display()))
    }

    fn library(&self, path: Option<&Path>) -> Result<HotspotLibrary> {
        match path {
            Some(p) => load_library(p, &self.tech)
                .with_context(|| format!("loading library {}", p.display())),
            None => Ok(HotspotLibrary::empty(&self.tech)),
        }
    }

    fn graph(&self, path: &Path) -> Result<LayoutGraph> {
        Ok(build_graph(Arc::new(self.layout(path)?), &self.tech)?)
    }

    fn exact_limit(&self, flag: Option<usize>) -> usize {
        flag.unwrap_or(self.config.exact_limit)
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    write_or_print(s, out)
}

fn write_or_print(s: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, s).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{s}");
            Ok(())
        }
    }
}

fn read_decomposition(path: &Path) -> Result<Decomposition> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Decomposition::from_json_str(&s)?)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let ctx = Ctx::new(&cli)?;
    let tech = &ctx.tech;

    match cli.command {
        Command::GenLayout {
            seed,
            rows,
            cols,
            pitch_x,
            pitch_y,
            density,
            out,
        } => {
            let base = match &ctx.config.layout {
                LayoutSource::Generate(g) => *g,
                LayoutSource::Path(_) => GridSpec::default(),
            };
            let spec = GridSpec {
                seed: seed.unwrap_or(base.seed),
                rows: rows.unwrap_or(base.rows),
                cols: cols.unwrap_or(base.cols),
                pitch_x: pitch_x.unwrap_or(base.pitch_x),
                pitch_y: pitch_y.unwrap_or(base.pitch_y),
                density: density.unwrap_or(base.density),
            };
            let layout = gen_random_layout(&spec, tech)?;
            save_layout(&layout, &out, LayoutFormat::from_path(&out))?;
            eprintln!("{} vias -> {}", layout.len(), out.display());
        }
        Command::GenHotspots {
            seed,
            rows,
            cols,
            cell_pitch_x,
            cell_pitch_y,
            count,
            min_vias,
            out,
        } => {
            let base = match &ctx.config.library {
                LibrarySource::Generate(p) => *p,
                _ => PatternGenSpec::default(),
            };
            let spec = PatternGenSpec {
                seed: seed.unwrap_or(base.seed),
                rows: rows.unwrap_or(base.rows),
                cols: cols.unwrap_or(base.cols),
                cell_pitch_x: cell_pitch_x.unwrap_or(base.cell_pitch_x),
                cell_pitch_y: cell_pitch_y.unwrap_or(base.cell_pitch_y),
                count: count.unwrap_or(base.count),
                min_vias: min_vias.unwrap_or(base.min_vias),
            };
            let lib = gen_random_patterns(&spec, tech)?;
            save_library(&lib, &out)?;
            eprintln!("{} patterns -> {}", lib.len(), out.display());
        }
        Command::BuildGraph { layout, out } => {
            let g = ctx.graph(&layout)?;
            emit(&g.dump(), out.as_deref())?;
        }
        Command::Detect {
            layout,
            library,
            out,
        } => {
            let g = ctx.graph(&layout)?;
            let lib = ctx.library(Some(&library))?;
            let hotspots = find_potential_hotspots(&g, &lib);
            let candidates = enumerate_eliminators(&hotspots, &g);
            emit(
                &DetectionDump {
                    hotspots,
                    candidates,
                },
                out.as_deref(),
            )?;
        }
        Command::Cover {
            layout,
            library,
            out,
        } => {
            let g = ctx.graph(&layout)?;
            let lib = ctx.library(Some(&library))?;
            let hotspots = find_potential_hotspots(&g, &lib);
            let candidates = enumerate_eliminators(&hotspots, &g);
            let cover = greedy_cover(hotspots.len(), &candidates)?;
            emit(&cover, out.as_deref())?;
        }
        Command::Decompose {
            layout,
            library,
            cover,
            mode,
            exact_limit,
            out,
        } => {
            if mode == Mode::Aware && library.is_none() {
                bail!("--mode aware needs --library");
            }
            let mut g = ctx.graph(&layout)?;
            let lib = ctx.library(library.as_deref())?;
            let phs = find_potential_hotspots(&g, &lib);
            match (mode, cover) {
                (_, Some(p)) => {
                    let s = fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    let c: CoverResult = serde_json::from_str(&s)?;
                    g = apply_eliminators(&g, &c)?;
                }
                (Mode::CoverUnaware, None) => {
                    let c = greedy_cover(phs.len(), &enumerate_eliminators(&phs, &g))?;
                    g = apply_eliminators(&g, &c)?;
                }
                _ => {}
            }
            let solve = match mode {
                Mode::Aware => SolveMode::aware(),
                _ => SolveMode::unaware(),
            }
            .with_exact_limit(ctx.exact_limit(exact_limit));
            let d = decompose_with_hotspots(&g, &phs, solve)?;
            write_or_print(d.to_json_string(), out.as_deref())?;
        }
        Command::Verify {
            layout,
            decomposition,
            library,
            out,
        } => {
            let l = ctx.layout(&layout)?;
            let d = read_decomposition(&decomposition)?;
            let lib = ctx.library(library.as_deref())?;
            let report = verify(&l, &d, tech, &lib)?;
            print!("{}", report.to_text());
            if let Some(p) = out {
                fs::write(&p, report.to_json_string())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Run(args) => {
            let mut config = ctx.config.clone();
            config.tech = *tech;
            if let Some(p) = args.layout {
                config.layout = LayoutSource::Path(p);
            }
            if let Some(p) = args.library {
                config.library = LibrarySource::Path(p);
            }
            if let Some(seed) = args.seed {
                if let LayoutSource::Generate(g) = &mut config.layout {
                    g.seed = seed;
                }
                if let LibrarySource::Generate(p) = &mut config.library {
                    p.seed = seed;
                }
            }
            if let Some(m) = args.mode {
                config.mode = m;
            }
            if let Some(k) = args.exact_limit {
                config.exact_limit = k;
            }
            if cli.threads.is_some() {
                config.threads = cli.threads;
            }
            if args.out_dir.is_some() {
                config.out_dir = args.out_dir;
            }
            config.svg |= args.svg;
            let out = run_pipeline(&config)?;
            print!("{}", out.report.violations.to_text());
            for t in &out.timings {
                eprintln!("{:<14} {:>9.3}s", t.stage, t.seconds);
            }
        }
        Command::Experiment {
            instances,
            seed,
            exact_limit,
            out,
        } => {
            let base = ExperimentSpec::default();
            let spec = ExperimentSpec {
                instances,
                seed: seed.unwrap_or(base.seed),
                tech: *tech,
                exact_limit: ctx.exact_limit(exact_limit),
                ..base
            };
            let table = run_experiment(&spec)?;
            print!("{}", table.to_text());
            if let Some(p) = out {
                fs::write(&p, table.to_json_string())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Render {
            layout,
            decomposition,
            library,
            out,
        } => {
            let l = ctx.layout(&layout)?;
            let d = read_decomposition(&decomposition)?;
            let lib = ctx.library(library.as_deref())?;
            let report = verify(&l, &d, tech, &lib)?;
            write_svg(&out, &l, &d, &report, &lib)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
