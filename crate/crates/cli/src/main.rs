//! `reptile`: verify, search, analyse and export lattice rep-tiles.
//!
//! Exit codes: 0 success / rep-tile, 1 not a rep-tile, 2 inconclusive,
//! 3 usage or input error, 4 internal error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use reptile::error::Error;
use reptile::export::{mesh_export, supertile_patch, svg_export};
use reptile::format::{emit_system, parse_system, IfsDocument};
use reptile::holes::find_hole_tile;
use reptile::ifs::RepTileSystem;
use reptile::lattice::enumerate_matrices;
use reptile::neighbor::{analyze_graph, build_graph, AnalysisReport, DEFAULT_NODE_BUDGET};
use reptile::search::{run_search_with, FilterSpec, Mode, ResultStore, SearchConfig, SEARCH_NODE_BUDGET};
use reptile::topology::{digit_cells, hole_report, voxelize, VoxelSet};

const OK: u8 = 0;
const NOT_REP_TILE: u8 = 1;
const INCONCLUSIVE: u8 = 2;
const USAGE: u8 = 3;
const INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "reptile", version, about = "Self-similar lattice rep-tiles in dimensions 2 and 3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Records,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SearchMode {
    Free,
    Block,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Mesh,
    Svg,
    Patch,
}

/// How a tile is turned into cells.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Approx {
    /// Images of the unit cell under all word maps (sharp pictures).
    Digit,
    /// Guaranteed outer cover by boxes around the word maps.
    Outer,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a system is a rep-tile and report its invariants.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: usize,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Random search for rep-tiles, appending new finds to a store.
    Search {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = SearchMode::Free)]
        mode: SearchMode,
        /// Translation coordinates are drawn from [-range, range].
        #[arg(long, default_value_t = 1)]
        range: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: u64,
        /// Wall-clock limit in seconds (runs cut short are not reproducible).
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = SEARCH_NODE_BUDGET)]
        node_budget: usize,
        /// Worker threads; 0 = available parallelism.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        filter_connected: bool,
        #[arg(long)]
        filter_boundary_dim: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        filter_boundary_tol: f64,
        #[arg(long)]
        filter_neighbors_min: Option<usize>,
        #[arg(long)]
        filter_neighbors_max: Option<usize>,
        /// Result store (JSON lines); appended to if it exists.
        #[arg(short, long)]
        output: PathBuf,
        /// Stamp records with the wall-clock time.
        #[arg(long)]
        timestamps: bool,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Write a mesh, an SVG drawing or a supertile patch.
    Export {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: ExportKind,
        /// Supertile level for svg/patch; resolution level for mesh.
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Resolution of each tile copy in an svg drawing.
        #[arg(long, default_value_t = 4)]
        tile_level: u32,
        #[arg(long, value_enum, default_value_t = Approx::Digit)]
        approx: Approx,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List the signed permutation matrices of a dimension.
    Enumerate {
        #[arg(long)]
        dim: usize,
    },
    /// Voxel topology of a tile: components, Euler characteristic, holes.
    Topology {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, value_enum, default_value_t = Approx::Digit)]
        approx: Approx,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Constraint search for the four-plate tile with one hole.
    HoleTile {
        /// Where to write the induced eight-map system.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnsupportedDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::Argument(_)
            | Error::Parse { .. }
            | Error::Validation { .. } => USAGE,
            Error::Inconclusive { .. } => INCONCLUSIVE,
            Error::Numerical { .. } | Error::Resource(_) | Error::Io(_) => INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: INTERNAL,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Verify {
            input,
            node_budget,
            format,
        } => verify(&input, node_budget, format),
        Command::Search {
            dim,
            mode,
            range,
            seed,
            trials,
            time_limit,
            node_budget,
            workers,
            filter_connected,
            filter_boundary_dim,
            filter_boundary_tol,
            filter_neighbors_min,
            filter_neighbors_max,
            output,
            timestamps,
            format,
        } => {
            let neighbor_count_range = match (filter_neighbors_min, filter_neighbors_max) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(usize::MAX))),
            };
            let mut config = SearchConfig::new(
                dim,
                match mode {
                    SearchMode::Free => Mode::Free,
                    SearchMode::Block => Mode::Block,
                },
                range,
                seed,
                trials,
            );
            if let Some(t) = time_limit {
                if t.is_nan() || t <= 0.0 {
                    return Err(usage("--time-limit must be positive"));
                }
                config.time_limit = Some(Duration::from_secs_f64(t));
            }
            config.node_budget = node_budget;
            config.workers = workers;
            config.filters = FilterSpec {
                require_connected: filter_connected,
                boundary_dim_target: filter_boundary_dim.map(|d| (d, filter_boundary_tol)),
                neighbor_count_range,
            };
            search(&config, &output, timestamps, format)
        }
        Command::Export {
            input,
            kind,
            level,
            tile_level,
            approx,
            node_budget,
            output,
        } => export(&input, kind, level, tile_level, approx, node_budget, &output),
        Command::Enumerate { dim } => {
            let matrices = enumerate_matrices(dim)?;
            let mut out = std::io::stdout().lock();
            for (k, m) in matrices.iter().enumerate() {
                let rows: Vec<String> = m
                    .to_dense()
                    .iter()
                    .map(|r| r.iter().map(|x| format!("{x:2}")).collect::<Vec<_>>().join(" "))
                    .collect();
                let _ = writeln!(
                    out,
                    "{k:2}  perm={:?} signs={:?}  [{}]",
                    m.perm(),
                    m.signs(),
                    rows.join(" | ")
                );
            }
            Ok(OK)
        }
        Command::Topology {
            input,
            level,
            approx,
            format,
        } => {
            let s = load(&input)?.to_system();
            let cells = cells_of(&s, level, approx)?;
            if s.dim() != 3 {
                return Err(usage("topology needs a three-dimensional system"));
            }
            let r = hole_report(&cells)?;
            match format {
                Format::Records => println!("{}", serde_json::to_string(&r).expect("serializable")),
                Format::Human => {
                    println!("cells: {}", cells.len());
                    println!("components: {}", r.components);
                    println!("euler_characteristic: {}", r.euler_characteristic);
                    println!("cavities: {}", r.cavities);
                    println!("handles: {}", r.handles);
                    println!("well_composed: {}", r.well_composed);
                    println!("interior_components_estimate: {} (heuristic)", r.interior_components_estimate);
                }
            }
            Ok(OK)
        }
        Command::HoleTile { output } => {
            let started = Instant::now();
            let found = find_hole_tile()?;
            println!("layouts_examined: {}", found.layouts_examined);
            println!("single_hole_layouts: {}", found.single_hole_layouts);
            println!("half_turn: {:?}", found.layout.half_turn);
            for p in &found.layout.plates {
                println!("plate: {:?}..{:?}", p.lo, p.hi);
            }
            println!("components: {}", found.report.components);
            println!("handles: {}", found.report.handles);
            println!("is_rep_tile: true");
            println!("seconds: {:.3}", started.elapsed().as_secs_f64());
            if let Some(path) = output {
                let doc = IfsDocument::System(found.system);
                fs::write(&path, emit_system(&doc)).map_err(|e| io_failure(&path, e))?;
            }
            Ok(OK)
        }
    }
}

fn load(path: &Path) -> Result<IfsDocument, Failure> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_system(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cells_of(s: &RepTileSystem, level: u32, approx: Approx) -> Result<VoxelSet, Failure> {
    Ok(match approx {
        Approx::Digit => {
            if level > reptile::topology::MAX_VOXEL_LEVEL {
                return Err(Error::Resource(format!("level {level} is too deep")).into());
            }
            digit_cells(s, level)?
        }
        Approx::Outer => voxelize(s, level)?,
    })
}

/// Builds the graph and returns the report, or the exit code when the
/// system is not a rep-tile or undecided.
fn analyze_checked(s: &RepTileSystem, node_budget: usize) -> Result<AnalysisReport, Failure> {
    let g = build_graph(s, node_budget);
    let report = analyze_graph(s, &g)?;
    if report.node_budget_exceeded {
        return Err(Failure {
            code: INCONCLUSIVE,
            message: format!("inconclusive: node budget {node_budget} exceeded"),
        });
    }
    if !report.is_rep_tile {
        return Err(Failure {
            code: NOT_REP_TILE,
            message: "not a rep-tile".into(),
        });
    }
    Ok(report)
}

fn dimension_text(d: Option<f64>) -> String {
    d.map(|d| format!("{d:.6}")).unwrap_or_else(|| "none".into())
}

fn verify(input: &Path, node_budget: usize, format: Format) -> CliResult {
    let s = load(input)?.to_system();
    let g = build_graph(&s, node_budget);
    let report = analyze_graph(&s, &g)?;
    let code = if report.node_budget_exceeded {
        INCONCLUSIVE
    } else if report.is_rep_tile {
        OK
    } else {
        NOT_REP_TILE
    };
    let status = match code {
        OK => "rep-tile",
        NOT_REP_TILE => "not-rep-tile",
        _ => "inconclusive",
    };
    match format {
        Format::Records => {
            let record = json!({
                "status": status,
                "is_rep_tile": report.is_rep_tile,
                "neighbor_count": report.neighbor_count,
                "boundary_dimension": report.boundary_dimension.map(|d| (d * 1e6).round() / 1e6),
                "connected": report.connected,
                "degrees": report.piece_adjacency.degree_sequence(),
                "graph_nodes": g.nodes().len(),
            });
            println!("{record}");
        }
        Format::Human => {
            println!("status: {status}");
            println!("is_rep_tile: {}", report.is_rep_tile);
            println!("neighbor_count: {}", report.neighbor_count);
            println!("boundary_dimension: {}", dimension_text(report.boundary_dimension));
            println!("connected: {}", report.connected);
            println!("graph_nodes: {}", g.nodes().len());
        }
    }
    Ok(code)
}

fn search(config: &SearchConfig, output: &Path, timestamps: bool, format: Format) -> CliResult {
    config.validate()?;
    let mut store = ResultStore::open(output)
        .map_err(|e| io_failure(output, std::io::Error::other(e.to_string())))?
        .with_timestamps(timestamps);
    let started = Instant::now();
    let summary = run_search_with(config, &mut store, |s| {
        log::info!("{} trials, {} rep-tiles, {} stored", s.trials, s.rep_tiles, s.inserted);
    })?;
    let seconds = started.elapsed().as_secs_f64();
    match format {
        Format::Records => {
            let mut v = serde_json::to_value(&summary).expect("serializable");
            v["seconds"] = json!((seconds * 1e3).round() / 1e3);
            println!("{v}");
        }
        Format::Human => {
            println!("trials: {}", summary.trials);
            println!("rep_tiles: {}", summary.rep_tiles);
            println!("not_rep_tiles: {}", summary.not_rep_tiles);
            println!("inconclusive: {}", summary.inconclusive);
            println!("analysis_errors: {}", summary.analysis_errors);
            println!("filtered_out: {}", summary.filtered_out);
            println!("duplicates: {}", summary.duplicates);
            println!("inserted: {}", summary.inserted);
            println!("store_records: {}", store.len());
            println!("seconds: {seconds:.3}");
            if seconds > 0.0 {
                println!("trials_per_second: {:.1}", summary.trials as f64 / seconds);
            }
        }
    }
    Ok(OK)
}

fn export(
    input: &Path,
    kind: ExportKind,
    level: u32,
    tile_level: u32,
    approx: Approx,
    node_budget: usize,
    output: &Path,
) -> CliResult {
    let s = load(input)?.to_system();
    let bytes = match kind {
        ExportKind::Mesh => {
            if s.dim() != 3 {
                return Err(usage("mesh export needs a three-dimensional system"));
            }
            mesh_export(&cells_of(&s, level, approx)?)?
        }
        ExportKind::Patch => {
            analyze_checked(&s, node_budget)?;
            supertile_patch(&s, level)?.to_json()
        }
        ExportKind::Svg => {
            if s.dim() != 2 {
                return Err(usage("svg export needs a two-dimensional system"));
            }
            analyze_checked(&s, node_budget)?;
            let patch = supertile_patch(&s, level)?;
            svg_export(&cells_of(&s, tile_level, approx)?, Some(&patch))?
        }
    };
    fs::write(output, bytes).map_err(|e| io_failure(output, e))?;
    Ok(OK)
}
