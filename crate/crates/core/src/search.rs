//! Random search over the data space: draw systems, verify, filter,
//! fingerprint, deduplicate and persist.
//!
//! Trial `t` of a run with seed `s` draws from ChaCha8 keyed by `s` on stream
//! `t`, so every trial is reproducible on its own and the accepted records do
//! not depend on how trials are spread over worker threads. Trials are
//! evaluated in parallel chunks and committed to the store in trial order.
//!
//! Candidates are decided by the backward walk first; only rep-tiles get the
//! forward neighbor graph the report needs. A candidate counts as
//! inconclusive when either stage outgrows the node budget.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{emit_compact, parse_system, IfsDocument};
use crate::ifs::{BlockSystem, RepTileSystem};
use crate::lattice::{enumerate_matrices, IntVector, LatticeIsometry, SignedPermMatrix};
use crate::neighbor::{analyze_graph, build_graph_with, decide_by_preimages, AnalysisReport, BuildOptions};

/// Node budget per candidate during search.
pub const SEARCH_NODE_BUDGET: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// All `2^dim` maps drawn independently.
    Free,
    /// Four maps `f1..f4` drawn, then expanded into eight (dimension 3 only).
    Block,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterSpec {
    pub require_connected: bool,
    /// `(target, tolerance)`.
    pub boundary_dim_target: Option<(f64, f64)>,
    /// Inclusive `(low, high)`.
    pub neighbor_count_range: Option<(usize, usize)>,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.neighbor_count_range {
            if lo > hi {
                return Err(Error::validation(
                    "neighbor_count_range",
                    format!("low {lo} exceeds high {hi}"),
                ));
            }
        }
        if let Some((_, tol)) = self.boundary_dim_target {
            if tol.is_nan() || tol < 0.0 {
                return Err(Error::validation("boundary_dim_target", "tolerance must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Whether a verified rep-tile's report passes every filter.
    pub fn accepts(&self, report: &AnalysisReport) -> bool {
        if !report.is_rep_tile {
            return false;
        }
        if self.require_connected && !report.connected {
            return false;
        }
        if let Some((target, tol)) = self.boundary_dim_target {
            match report.boundary_dimension {
                Some(d) if (d - target).abs() <= tol => {}
                _ => return false,
            }
        }
        if let Some((lo, hi)) = self.neighbor_count_range {
            if report.neighbor_count < lo || report.neighbor_count > hi {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub dim: usize,
    pub mode: Mode,
    pub translation_range: i64,
    pub seed: u64,
    pub trials: u64,
    /// Stop at the first chunk boundary after this much wall-clock time.
    /// Runs cut short this way are not reproducible.
    pub time_limit: Option<Duration>,
    pub filters: FilterSpec,
    pub node_budget: usize,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
}

impl SearchConfig {
    pub fn new(dim: usize, mode: Mode, translation_range: i64, seed: u64, trials: u64) -> Self {
        SearchConfig {
            dim,
            mode,
            translation_range,
            seed,
            trials,
            time_limit: None,
            filters: FilterSpec::default(),
            node_budget: SEARCH_NODE_BUDGET,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.mode == Mode::Block && self.dim != 3 {
            return Err(Error::Argument("block mode requires dimension 3".into()));
        }
        if self.translation_range < 0 {
            return Err(Error::validation("translation_range", "must be nonnegative"));
        }
        if self.node_budget == 0 {
            return Err(Error::validation("node_budget", "must be positive"));
        }
        self.filters.validate()
    }
}

/// Random source for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_map(rng: &mut ChaCha8Rng, matrices: &[SignedPermMatrix], dim: usize, range: i64) -> LatticeIsometry {
    let m = matrices[rng.gen_range(0..matrices.len())];
    let mut v = [0i64; 3];
    for c in v.iter_mut().take(dim) {
        *c = rng.gen_range(-range..=range);
    }
    LatticeIsometry::new(m, IntVector::new(&v[..dim]).expect("dim checked")).expect("same dim")
}

/// The system of trial `trial`, as stored (blocks stay blocks).
pub fn random_document(config: &SearchConfig, trial: u64) -> Result<IfsDocument> {
    config.validate()?;
    let matrices = enumerate_matrices(config.dim)?;
    Ok(draw(config, &matrices, trial))
}

/// The expanded system of trial `trial`.
pub fn random_system(config: &SearchConfig, trial: u64) -> Result<RepTileSystem> {
    Ok(random_document(config, trial)?.to_system())
}

fn draw(config: &SearchConfig, matrices: &[SignedPermMatrix], trial: u64) -> IfsDocument {
    let mut rng = trial_rng(config.seed, trial);
    let (dim, r) = (config.dim, config.translation_range);
    match config.mode {
        Mode::Free => {
            let maps = (0..1usize << dim)
                .map(|_| random_map(&mut rng, matrices, dim, r))
                .collect();
            IfsDocument::System(RepTileSystem::new(dim, maps).expect("2^dim maps"))
        }
        Mode::Block => {
            let mut f = || random_map(&mut rng, matrices, dim, r);
            let (f1, f2, f3, f4) = (f(), f(), f(), f());
            IfsDocument::Block(BlockSystem::new(f1, f2, f3, f4).expect("dim 3"))
        }
    }
}

/// Invariant summary used as the deduplication key. Not a congruence test:
/// distinct tiles may share a fingerprint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fingerprint {
    pub dim: usize,
    pub m: usize,
    pub neighbor_count: usize,
    /// Boundary dimension in millionths.
    pub boundary_dim_micro: i64,
    pub connected: bool,
    pub degrees: Vec<u32>,
}

pub fn fingerprint(report: &AnalysisReport, s: &RepTileSystem) -> Fingerprint {
    Fingerprint {
        dim: s.dim(),
        m: s.m(),
        neighbor_count: report.neighbor_count,
        boundary_dim_micro: report
            .boundary_dimension
            .map(|d| (d * 1e6).round() as i64)
            .unwrap_or(-1),
        connected: report.connected,
        degrees: report.piece_adjacency.degree_sequence(),
    }
}

/// Snapshot of the analysis stored with a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSnapshot {
    pub is_rep_tile: bool,
    pub neighbor_count: usize,
    pub boundary_dimension: Option<f64>,
    pub connected: bool,
}

impl From<&AnalysisReport> for ReportSnapshot {
    fn from(r: &AnalysisReport) -> Self {
        ReportSnapshot {
            is_rep_tile: r.is_rep_tile,
            neighbor_count: r.neighbor_count,
            boundary_dimension: r.boundary_dimension,
            connected: r.connected,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub fingerprint: Fingerprint,
    pub system: IfsDocument,
    pub seed: u64,
    pub trial: u64,
    pub report: ReportSnapshot,
    /// Seconds since the Unix epoch; only written when requested.
    pub timestamp: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct StoredLine {
    fingerprint: Fingerprint,
    system: serde_json::Value,
    seed: u64,
    trial: u64,
    report: ReportSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

impl ResultRecord {
    pub fn to_line(&self) -> String {
        let system = serde_json::from_str(&emit_compact(&self.system)).expect("valid json");
        let line = StoredLine {
            fingerprint: self.fingerprint.clone(),
            system,
            seed: self.seed,
            trial: self.trial,
            report: self.report.clone(),
            timestamp: self.timestamp,
        };
        serde_json::to_string(&line).expect("serializable")
    }

    pub fn from_line(line: &str) -> Result<ResultRecord> {
        let stored: StoredLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let system = parse_system(stored.system.to_string().as_bytes())?;
        Ok(ResultRecord {
            fingerprint: stored.fingerprint,
            system,
            seed: stored.seed,
            trial: stored.trial,
            report: stored.report,
            timestamp: stored.timestamp,
        })
    }
}

/// Append-only JSON-lines store with an in-memory fingerprint index.
#[derive(Debug)]
pub struct ResultStore {
    path: PathBuf,
    file: File,
    index: HashSet<Fingerprint>,
    skipped_lines: usize,
    timestamps: bool,
}

impl ResultStore {
    /// Opens (creating if needed) and indexes the store. Unreadable lines are
    /// skipped with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<ResultStore> {
        let path = path.as_ref().to_path_buf();
        let (records, skipped_lines) = read_store(&path)?;
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(ResultStore {
            path,
            file,
            index: records.into_iter().map(|r| r.fingerprint).collect(),
            skipped_lines,
            timestamps: false,
        })
    }

    /// Stamp newly inserted records with the current time.
    pub fn with_timestamps(mut self, on: bool) -> Self {
        self.timestamps = on;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn contains(&self, fp: &Fingerprint) -> bool {
        self.index.contains(fp)
    }

    /// Appends the record unless its fingerprint is already present.
    pub fn insert(&mut self, mut record: ResultRecord) -> Result<bool> {
        if self.index.contains(&record.fingerprint) {
            return Ok(false);
        }
        if self.timestamps && record.timestamp.is_none() {
            record.timestamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs());
        }
        let mut line = record.to_line();
        line.push('\n');
        // One write per record keeps lines whole.
        self.file.write_all(line.as_bytes())?;
        self.index.insert(record.fingerprint);
        Ok(true)
    }
}

/// All parseable records of a store file, plus the number of skipped lines.
/// A missing file is an empty store.
pub fn read_store(path: &Path) -> Result<(Vec<ResultRecord>, usize)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(e.into()),
    };
    let mut records = Vec::new();
    let mut skipped = 0;
    for (k, line) in BufReader::new(file).split(b'\n').enumerate() {
        let line = line?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match std::str::from_utf8(&line)
            .map_err(|e| Error::Argument(e.to_string()))
            .and_then(ResultRecord::from_line)
        {
            Ok(r) => records.push(r),
            Err(e) => {
                skipped += 1;
                log::warn!("{}: skipping line {}: {e}", path.display(), k + 1);
            }
        }
    }
    Ok((records, skipped))
}

/// Run totals. `trials = not_rep_tiles + inconclusive + rep_tiles` and
/// `rep_tiles = analysis_errors + filtered_out + duplicates + inserted`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchSummary {
    pub trials: u64,
    pub not_rep_tiles: u64,
    pub inconclusive: u64,
    pub rep_tiles: u64,
    pub analysis_errors: u64,
    pub filtered_out: u64,
    pub duplicates: u64,
    pub inserted: u64,
}

impl SearchSummary {
    pub fn is_consistent(&self) -> bool {
        self.trials == self.not_rep_tiles + self.inconclusive + self.rep_tiles
            && self.rep_tiles == self.analysis_errors + self.filtered_out + self.duplicates + self.inserted
    }
}

enum Outcome {
    NotTile,
    Inconclusive,
    Tile(Box<(IfsDocument, RepTileSystem, AnalysisReport)>),
    AnalysisError,
}

/// Decides one candidate. The graph is abandoned as soon as the identity
/// shows up, which settles most non-tiles cheaply.
fn evaluate(doc: IfsDocument, node_budget: usize) -> Outcome {
    let s = doc.to_system();
    // The backward walk settles most candidates; only tiles pay for the
    // forward graph that the report needs.
    match decide_by_preimages(&s, node_budget) {
        Ok(false) => return Outcome::NotTile,
        Err(Error::Inconclusive { .. }) => return Outcome::Inconclusive,
        Err(_) => return Outcome::AnalysisError,
        Ok(true) => {}
    }
    let g = build_graph_with(
        &s,
        BuildOptions {
            node_budget,
            ..BuildOptions::default()
        },
    );
    match g.decide_rep_tile() {
        Ok(true) => match analyze_graph(&s, &g) {
            Ok(report) => Outcome::Tile(Box::new((doc, s, report))),
            Err(e) => {
                log::warn!("analysis failed: {e}");
                Outcome::AnalysisError
            }
        },
        Err(Error::Inconclusive { .. }) => Outcome::Inconclusive,
        Ok(false) => {
            log::error!("forward and backward decisions disagree");
            Outcome::AnalysisError
        }
        Err(_) => Outcome::AnalysisError,
    }
}

/// Trials evaluated between store commits and time-limit checks.
const CHUNK: u64 = 512;

/// Runs the search, inserting accepted records into `store`.
pub fn run_search(config: &SearchConfig, store: &mut ResultStore) -> Result<SearchSummary> {
    run_search_with(config, store, |_| {})
}

/// As [`run_search`], calling `progress` after every chunk.
pub fn run_search_with(
    config: &SearchConfig,
    store: &mut ResultStore,
    mut progress: impl FnMut(&SearchSummary),
) -> Result<SearchSummary> {
    config.validate()?;
    let matrices = enumerate_matrices(config.dim)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    let start = Instant::now();
    let mut summary = SearchSummary::default();
    let mut next = 0u64;
    while next < config.trials {
        if config.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            break;
        }
        let end = (next + CHUNK).min(config.trials);
        let outcomes: Vec<(u64, Outcome)> = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|t| (t, evaluate(draw(config, &matrices, t), config.node_budget)))
                .collect()
        });
        for (trial, outcome) in outcomes {
            summary.trials += 1;
            match outcome {
                Outcome::NotTile => summary.not_rep_tiles += 1,
                Outcome::Inconclusive => summary.inconclusive += 1,
                Outcome::AnalysisError => {
                    summary.rep_tiles += 1;
                    summary.analysis_errors += 1;
                }
                Outcome::Tile(found) => {
                    let (doc, s, report) = *found;
                    summary.rep_tiles += 1;
                    if !config.filters.accepts(&report) {
                        summary.filtered_out += 1;
                        continue;
                    }
                    let record = ResultRecord {
                        fingerprint: fingerprint(&report, &s),
                        system: doc,
                        seed: config.seed,
                        trial,
                        report: ReportSnapshot::from(&report),
                        timestamp: None,
                    };
                    if store.insert(record)? {
                        summary.inserted += 1;
                    } else {
                        summary.duplicates += 1;
                    }
                }
            }
        }
        next = end;
        progress(&summary);
    }
    Ok(summary)
}
