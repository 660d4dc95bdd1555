//! Configuration-driven benchmark orchestration: expands the
//! (matrix × ordering × preconditioner-config) grid, runs instrumented PCG
//! for every cell, and persists run records, direct baselines, traces and a
//! manifest. Sweeps are resumable: completed run keys are skipped.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fetch::{fetch_matrix, FetchError, CACHE_ENV};
use crate::ordering::{load_permutation, permute_symmetric, rcm_order, Permutation};
use crate::precond::{
    build_ic, build_jacobi_control, build_laplacian_pipeline, build_sspai, build_ssor, build_tns,
    optimal_omega, AlphaChoice, Preconditioner, SspaiConfig, SsorConfig, TnsConfig,
};
use crate::problem::{classify_sdd, generate_problem, SddStatus, SeededProblem, DEFAULT_SEED};
use crate::profile::{RunRecord, RunStatus};
use crate::solver::{pcg, write_trace_jsonl, PcgConfig, SolveStatus};
use crate::sparse::{scale_and_symmetrize, SparseMatrix};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("resume refused: config hash {found} does not match manifest {expected}")]
    ConfigChanged { expected: String, found: String },
    #[error(transparent)]
    Ordering(#[from] crate::ordering::OrderingError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixSource {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderingSpec {
    /// "natural" or "rcm".
    Named(String),
    /// External permutation file (one index per line), e.g. an AMD order.
    File { file: PathBuf, label: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplacianSetting {
    pub droptol: f64,
    #[serde(default)]
    pub lift: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LuAdapterSetting {
    pub label: String,
    pub l_path: PathBuf,
    pub diag_path: PathBuf,
}

/// Per-class parameter lists; the defaults are the standard settings grids.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PrecondGrid {
    pub tns_terms: Vec<usize>,
    pub tns_alphas: Vec<String>,
    pub ssor_sweeps: Vec<usize>,
    pub ssor_omegas: Vec<f64>,
    pub ssor_optimal_omega: bool,
    pub sspai_multipliers: Vec<f64>,
    pub ic_droptols: Vec<f64>,
    pub ic_modified: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laplacian: Option<LaplacianSetting>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lu_adapters: Vec<LuAdapterSetting>,
}

impl Default for PrecondGrid {
    fn default() -> Self {
        Self {
            tns_terms: vec![1, 2, 3, 4],
            tns_alphas: vec!["fro", "inf", "one", "two", "unit"]
                .into_iter()
                .map(String::from)
                .collect(),
            ssor_sweeps: vec![1, 2],
            ssor_omegas: vec![1.0, 1.2, 1.5, 1.8],
            ssor_optimal_omega: true,
            sspai_multipliers: vec![0.5, 1.0, 2.0, 3.0],
            ic_droptols: vec![0.0, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            ic_modified: vec![false, true],
            laplacian: None,
            lu_adapters: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub rel_res_tol: f64,
    /// max_iters = factor · n.
    pub max_iters_factor: usize,
    pub record_every: usize,
    pub track_nrbe: bool,
    /// Power-iteration cap for the ‖A‖₂ estimate.
    pub two_norm_iters: usize,
    pub two_norm_seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_res_tol: 1e-10,
            max_iters_factor: 10,
            record_every: 1,
            track_nrbe: true,
            two_norm_iters: 500,
            two_norm_seed: 1,
        }
    }
}

fn default_orderings() -> Vec<OrderingSpec> {
    vec![OrderingSpec::Named("natural".into())]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_parallelism() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub matrices: Vec<MatrixSource>,
    #[serde(default = "default_orderings")]
    pub orderings: Vec<OrderingSpec>,
    #[serde(default)]
    pub precond_grid: PrecondGrid,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub record_traces: bool,
    #[serde(default = "default_true")]
    pub compute_direct_baseline: bool,
    #[serde(default)]
    pub offline: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl BenchmarkConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.matrices.is_empty() {
            return Err(HarnessError::Config("matrices list is empty".into()));
        }
        if self.orderings.is_empty() {
            return Err(HarnessError::Config("orderings list is empty".into()));
        }
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be >= 1".into()));
        }
        let g = &self.precond_grid;
        if g.tns_terms.iter().any(|&m| m == 0) {
            return Err(HarnessError::Config("tns terms must be >= 1".into()));
        }
        for alpha in &g.tns_alphas {
            if parse_alpha(alpha).is_none() {
                return Err(HarnessError::Config(format!("unknown tns alpha choice: {alpha}")));
            }
        }
        if g.ssor_sweeps.iter().any(|&s| s == 0) {
            return Err(HarnessError::Config("ssor sweeps must be >= 1".into()));
        }
        if g.ssor_omegas.iter().any(|&w| !(w > 0.0 && w < 2.0)) {
            return Err(HarnessError::Config("ssor omega outside (0,2)".into()));
        }
        if g.sspai_multipliers.iter().any(|&m| !(m > 0.0)) {
            return Err(HarnessError::Config("sspai multiplier must be positive".into()));
        }
        if g.ic_droptols.iter().any(|&t| t < 0.0) {
            return Err(HarnessError::Config("ic droptol must be >= 0".into()));
        }
        for o in &self.orderings {
            if let OrderingSpec::Named(name) = o {
                if name != "natural" && name != "rcm" {
                    return Err(HarnessError::Config(format!(
                        "unknown ordering {name}; use natural, rcm, or a file spec"
                    )));
                }
            }
        }
        // duplicated cells would collide on run keys and break resume
        let mut labels = std::collections::BTreeSet::new();
        for spec in expand_grid(&self.precond_grid) {
            if !labels.insert(spec.label()) {
                return Err(HarnessError::Config(format!(
                    "duplicate grid entry {}",
                    spec.label()
                )));
            }
        }
        let mut ordering_labels = std::collections::BTreeSet::new();
        for o in &self.orderings {
            if !ordering_labels.insert(ordering_label_of(o)) {
                return Err(HarnessError::Config(format!(
                    "duplicate ordering label {}",
                    ordering_label_of(o)
                )));
            }
        }
        let mut matrix_ids = std::collections::BTreeSet::new();
        for m in &self.matrices {
            if !matrix_ids.insert(m.id.clone()) {
                return Err(HarnessError::Config(format!("duplicate matrix id {}", m.id)));
            }
        }
        Ok(())
    }

    fn cache_dir(&self) -> PathBuf {
        if let Some(dir) = &self.cache_dir {
            return dir.clone();
        }
        if let Ok(env_dir) = std::env::var(CACHE_ENV) {
            if !env_dir.is_empty() {
                return PathBuf::from(env_dir);
            }
        }
        self.output_dir.join("cache")
    }
}

/// One grid cell: how to build the preconditioner for a block.
#[derive(Clone, Debug)]
pub enum PrecondSpec {
    Control,
    Tns { terms: usize, alpha: AlphaChoice },
    Ssor { sweeps: usize, omega: OmegaKind },
    Sspai { multiplier: f64 },
    Ic { droptol: f64, modified: bool },
    Laplacian { droptol: f64, lift: bool },
    Lu { label: String, l_path: PathBuf, diag_path: PathBuf },
}

#[derive(Clone, Copy, Debug)]
pub enum OmegaKind {
    Fixed(f64),
    /// Property-A closed form from the Jacobi-matrix norm; skipped on
    /// matrices where it is undefined.
    Optimal,
}

fn parse_alpha(label: &str) -> Option<AlphaChoice> {
    match label {
        "fro" => Some(AlphaChoice::Frobenius),
        "inf" => Some(AlphaChoice::InfinityNorm),
        "one" => Some(AlphaChoice::OneNorm),
        "two" => Some(AlphaChoice::TwoNorm),
        "unit" => Some(AlphaChoice::Unit),
        _ => None,
    }
}

impl PrecondSpec {
    pub fn label(&self) -> String {
        match self {
            PrecondSpec::Control => "control".into(),
            PrecondSpec::Tns { terms, alpha } => {
                format!("tns:m={},alpha={}", terms, alpha.label())
            }
            PrecondSpec::Ssor { sweeps, omega } => match omega {
                OmegaKind::Fixed(w) if *w == 1.0 => format!("sgs:sweeps={sweeps}"),
                OmegaKind::Fixed(w) => format!("ssor:sweeps={sweeps},omega={w}"),
                OmegaKind::Optimal => format!("ssor:sweeps={sweeps},omega=opt"),
            },
            PrecondSpec::Sspai { multiplier } => format!("sspai:fill={multiplier}"),
            PrecondSpec::Ic { droptol, modified } => {
                let head = if *modified { "mic" } else { "ic" };
                if *droptol == 0.0 {
                    format!("{head}0")
                } else {
                    format!("{head}:droptol={droptol:e}")
                }
            }
            PrecondSpec::Laplacian { droptol, .. } => format!("laplacian:droptol={droptol:e}"),
            PrecondSpec::Lu { label, .. } => label.clone(),
        }
    }
}

/// Deterministic expansion of the grid, control first.
pub fn expand_grid(grid: &PrecondGrid) -> Vec<PrecondSpec> {
    let mut specs = vec![PrecondSpec::Control];
    for &terms in &grid.tns_terms {
        for alpha in &grid.tns_alphas {
            specs.push(PrecondSpec::Tns {
                terms,
                alpha: parse_alpha(alpha).expect("validated"),
            });
        }
    }
    for &sweeps in &grid.ssor_sweeps {
        for &omega in &grid.ssor_omegas {
            specs.push(PrecondSpec::Ssor { sweeps, omega: OmegaKind::Fixed(omega) });
        }
        if grid.ssor_optimal_omega {
            specs.push(PrecondSpec::Ssor { sweeps, omega: OmegaKind::Optimal });
        }
    }
    for &multiplier in &grid.sspai_multipliers {
        specs.push(PrecondSpec::Sspai { multiplier });
    }
    for &modified in &grid.ic_modified {
        for &droptol in &grid.ic_droptols {
            specs.push(PrecondSpec::Ic { droptol, modified });
        }
    }
    if let Some(lap) = &grid.laplacian {
        specs.push(PrecondSpec::Laplacian { droptol: lap.droptol, lift: lap.lift });
    }
    for adapter in &grid.lu_adapters {
        specs.push(PrecondSpec::Lu {
            label: adapter.label.clone(),
            l_path: adapter.l_path.clone(),
            diag_path: adapter.diag_path.clone(),
        });
    }
    specs
}

/// Everything one (matrix, ordering) block needs to run its solves.
struct BlockContext {
    matrix_id: String,
    ordering_label: String,
    /// Permuted scaled system: the solve target.
    system: SparseMatrix,
    /// Permuted unscaled matrix, for the SDD case rules.
    unscaled: SparseMatrix,
    two_norm_est: f64,
    jacobi_norm: Option<f64>,
    problem: SeededProblem,
    direct_cost: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestRun {
    pub key: String,
    pub status: RunStatus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FetchedMatrix {
    pub id: String,
    pub sha256: String,
}

/// Per-(matrix, ordering) problem facts: dimension, nonzeros, and the
/// seeded right-hand side's support size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestProblem {
    pub matrix_id: String,
    pub ordering_label: String,
    pub n: usize,
    pub nnz: usize,
    pub support_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub toolkit_version: String,
    pub seed: u64,
    pub fetched: Vec<FetchedMatrix>,
    pub problems: Vec<ManifestProblem>,
    pub runs: Vec<ManifestRun>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub manifest: RunManifest,
    /// Solves actually performed in this invocation.
    pub executed: usize,
    /// Keys skipped because a prior record already covered them.
    pub skipped: usize,
}

pub fn records_path(output_dir: &Path) -> PathBuf {
    output_dir.join("records.jsonl")
}

pub fn manifest_path(output_dir: &Path) -> PathBuf {
    output_dir.join("manifest.json")
}

pub fn baselines_path(output_dir: &Path) -> PathBuf {
    output_dir.join("direct_baselines.jsonl")
}

fn run_key(config: &BenchmarkConfig, matrix: &str, ordering: &str, label: &str) -> String {
    format!("{}|{}|{}|{}|{:e}", matrix, ordering, label, config.seed, config.solver.rel_res_tol)
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut out = Vec::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in std::fs::read_to_string(path)?.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line)?);
    }
    Ok(out)
}

/// Direct baselines as (matrix_id, ordering_label) -> cost.
pub fn read_direct_baselines(
    path: &Path,
) -> Result<BTreeMap<(String, String), u64>, HarnessError> {
    #[derive(Deserialize)]
    struct Row {
        matrix_id: String,
        ordering_label: String,
        direct_cost: u64,
    }
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in std::fs::read_to_string(path)?.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line)?;
        out.insert((row.matrix_id, row.ordering_label), row.direct_cost);
    }
    Ok(out)
}

pub fn run_benchmark(config: &BenchmarkConfig, resume: bool) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    let started_unix = unix_now();
    let config_hash = crate::fetch::sha256_hex(&serde_json::to_vec(config)?);

    let rec_path = records_path(&config.output_dir);
    let man_path = manifest_path(&config.output_dir);
    let base_path = baselines_path(&config.output_dir);

    let mut prior: BTreeMap<String, RunRecord> = BTreeMap::new();
    if resume {
        if man_path.exists() {
            let manifest: RunManifest = serde_json::from_str(&std::fs::read_to_string(&man_path)?)?;
            if manifest.config_hash != config_hash {
                return Err(HarnessError::ConfigChanged {
                    expected: manifest.config_hash,
                    found: config_hash,
                });
            }
        }
        for rec in read_records(&rec_path)? {
            let key = run_key(config, &rec.matrix_id, &rec.ordering_label, &rec.precond_label);
            prior.insert(key, rec);
        }
    } else {
        let _ = std::fs::remove_file(&rec_path);
        let _ = std::fs::remove_file(&base_path);
    }

    // Ingest and prepare every block up front; failures become records.
    let specs = expand_grid(&config.precond_grid);
    let needs_jacobi_norm = specs
        .iter()
        .any(|s| matches!(s, PrecondSpec::Ssor { omega: OmegaKind::Optimal, .. }));
    let cache_dir = config.cache_dir();
    let mut fetched = Vec::new();
    let mut blocks: Vec<BlockContext> = Vec::new();
    let mut ingest_records: Vec<RunRecord> = Vec::new();

    for source in &config.matrices {
        match prepare_matrix(config, source, &cache_dir, &mut fetched) {
            Ok(prepared) => {
                for ordering in &config.orderings {
                    match prepare_block(config, &prepared, ordering, needs_jacobi_norm) {
                        Ok(block) => blocks.push(block),
                        Err(msg) => ingest_records.push(ingest_failure_record(
                            &source.id,
                            &ordering_label_of(ordering),
                            &msg,
                        )),
                    }
                }
            }
            Err(msg) => ingest_records.push(ingest_failure_record(&source.id, "-", &msg)),
        }
    }

    // Direct baselines, rebuilt deterministically every run.
    if config.compute_direct_baseline {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&base_path)?);
        for block in &blocks {
            if let Some(cost) = block.direct_cost {
                writeln!(
                    w,
                    "{{\"matrix_id\":\"{}\",\"ordering_label\":\"{}\",\"direct_cost\":{}}}",
                    block.matrix_id, block.ordering_label, cost
                )?;
            }
        }
        w.flush()?;
    }

    let traces_dir = config.output_dir.join("traces");
    if config.record_traces {
        std::fs::create_dir_all(&traces_dir)?;
    }

    let executed = AtomicUsize::new(0);
    let skipped = AtomicUsize::new(0);

    let mut appended: Vec<RunRecord> = Vec::new();
    {
        let mut writer = std::io::BufWriter::new(
            std::fs::OpenOptions::new().create(true).append(true).open(&rec_path)?,
        );
        for rec in &ingest_records {
            let key = run_key(config, &rec.matrix_id, &rec.ordering_label, &rec.precond_label);
            if prior.contains_key(&key) {
                skipped.fetch_add(1, AtomicOrdering::SeqCst);
                continue;
            }
            writeln!(writer, "{}", serde_json::to_string(rec)?)?;
            appended.push(rec.clone());
        }
        writer.flush()?;

        let run_block = |block: &BlockContext| -> Vec<RunRecord> {
            let mut out = Vec::new();
            // control first: candidates embed its work
            let control_key =
                run_key(config, &block.matrix_id, &block.ordering_label, "control");
            let control_record = if let Some(rec) = prior.get(&control_key) {
                skipped.fetch_add(1, AtomicOrdering::SeqCst);
                rec.clone()
            } else {
                executed.fetch_add(1, AtomicOrdering::SeqCst);
                let rec = solve_task(config, block, &PrecondSpec::Control, None, &traces_dir);
                out.push(rec.clone());
                rec
            };
            let control_work = control_record.work_to_tol;
            for spec in &specs[1..] {
                let label = spec.label();
                let key = run_key(config, &block.matrix_id, &block.ordering_label, &label);
                if prior.contains_key(&key) {
                    skipped.fetch_add(1, AtomicOrdering::SeqCst);
                    continue;
                }
                if let OmegaKind::Optimal = match spec {
                    PrecondSpec::Ssor { omega, .. } => *omega,
                    _ => OmegaKind::Fixed(0.0),
                } {
                    // undefined optimal omega: configuration not run here
                    if optimal_omega_for(block).is_none() {
                        continue;
                    }
                }
                executed.fetch_add(1, AtomicOrdering::SeqCst);
                out.push(solve_task(config, block, spec, control_work, &traces_dir));
            }
            out
        };

        if config.parallelism <= 1 || blocks.len() <= 1 {
            for block in &blocks {
                for rec in run_block(block) {
                    writeln!(writer, "{}", serde_json::to_string(&rec)?)?;
                    appended.push(rec);
                }
                writer.flush()?;
            }
        } else {
            // Block-level worker pool; results written in canonical block
            // order through a reordering buffer.
            let next = AtomicUsize::new(0);
            let (tx, rx) = mpsc::channel::<(usize, Vec<RunRecord>)>();
            let writer = &mut writer;
            let appended = &mut appended;
            std::thread::scope(|scope| -> Result<(), HarnessError> {
                let workers = config.parallelism.min(blocks.len());
                for _ in 0..workers {
                    let tx = tx.clone();
                    let next = &next;
                    let blocks = &blocks;
                    let run_block = &run_block;
                    scope.spawn(move || loop {
                        let i = next.fetch_add(1, AtomicOrdering::SeqCst);
                        if i >= blocks.len() {
                            break;
                        }
                        let recs = run_block(&blocks[i]);
                        if tx.send((i, recs)).is_err() {
                            break;
                        }
                    });
                }
                drop(tx);
                let mut pending: BTreeMap<usize, Vec<RunRecord>> = BTreeMap::new();
                let mut next_write = 0usize;
                for (i, recs) in rx {
                    pending.insert(i, recs);
                    while let Some(recs) = pending.remove(&next_write) {
                        for rec in recs {
                            writeln!(writer, "{}", serde_json::to_string(&rec)?)?;
                            appended.push(rec);
                        }
                        writer.flush()?;
                        next_write += 1;
                    }
                }
                Ok(())
            })?;
        }
    }

    // Final record set: prior plus appended, in file order.
    let records = read_records(&rec_path)?;
    let mut runs: Vec<ManifestRun> = records
        .iter()
        .map(|rec| ManifestRun {
            key: run_key(config, &rec.matrix_id, &rec.ordering_label, &rec.precond_label),
            status: rec.status,
        })
        .collect();
    runs.sort_by(|a, b| a.key.cmp(&b.key));

    let problems = blocks
        .iter()
        .map(|block| ManifestProblem {
            matrix_id: block.matrix_id.clone(),
            ordering_label: block.ordering_label.clone(),
            n: block.system.dim(),
            nnz: block.system.nnz(),
            support_size: block.problem.support_size,
        })
        .collect();
    let manifest = RunManifest {
        config_hash,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        fetched,
        problems,
        runs,
        started_unix,
        finished_unix: unix_now(),
    };
    std::fs::write(&man_path, serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunOutcome {
        records,
        manifest,
        executed: executed.into_inner(),
        skipped: skipped.into_inner(),
    })
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct PreparedMatrix {
    id: String,
    scaled: crate::sparse::ScaledSystem,
    unscaled: SparseMatrix,
    two_norm_est: f64,
}

fn prepare_matrix(
    config: &BenchmarkConfig,
    source: &MatrixSource,
    cache_dir: &Path,
    fetched: &mut Vec<FetchedMatrix>,
) -> Result<PreparedMatrix, String> {
    let path = if let Some(path) = &source.path {
        path.clone()
    } else if let Some(url) = &source.url {
        match fetch_matrix(&source.id, url, cache_dir, config.offline, source.checksum.as_deref())
        {
            Ok((path, sha256)) => {
                fetched.push(FetchedMatrix { id: source.id.clone(), sha256 });
                path
            }
            Err(e @ (FetchError::ChecksumMismatch { .. } | FetchError::OfflineMiss { .. })) => {
                return Err(format!("fetch skipped: {e}"));
            }
            Err(e) => return Err(format!("fetch failed: {e}")),
        }
    } else {
        return Err("matrix source needs a path or url".into());
    };

    let matrix = crate::market::read_matrix_market(&path).map_err(|e| format!("ingest: {e}"))?;
    let scaled = scale_and_symmetrize(&matrix).map_err(|e| format!("scaling: {e}"))?;
    let two_norm_est = scaled
        .matrix
        .estimate_two_norm(config.solver.two_norm_iters, config.solver.two_norm_seed);
    Ok(PreparedMatrix { id: source.id.clone(), scaled, unscaled: matrix, two_norm_est })
}

fn ordering_label_of(spec: &OrderingSpec) -> String {
    match spec {
        OrderingSpec::Named(name) => name.clone(),
        OrderingSpec::File { label, .. } => label.clone(),
    }
}

fn prepare_block(
    config: &BenchmarkConfig,
    prepared: &PreparedMatrix,
    ordering: &OrderingSpec,
    needs_jacobi_norm: bool,
) -> Result<BlockContext, String> {
    let n = prepared.scaled.matrix.dim();
    let perm = match ordering {
        OrderingSpec::Named(name) if name == "natural" => Permutation::identity(n),
        OrderingSpec::Named(name) if name == "rcm" => rcm_order(&prepared.scaled.matrix),
        OrderingSpec::Named(name) => return Err(format!("unknown ordering {name}")),
        OrderingSpec::File { file, label } => {
            let loaded = load_permutation(file, n).map_err(|e| format!("permutation: {e}"))?;
            Permutation::from_new_to_old(loaded.new_to_old().to_vec(), label.clone())
                .map_err(|e| format!("permutation: {e}"))?
        }
    };
    let label = ordering_label_of(ordering);
    let system =
        permute_symmetric(&prepared.scaled.matrix, &perm).map_err(|e| format!("permute: {e}"))?;
    let unscaled =
        permute_symmetric(&prepared.unscaled, &perm).map_err(|e| format!("permute: {e}"))?;
    let problem =
        generate_problem(&system, config.seed).map_err(|e| format!("problem setup: {e}"))?;
    let direct_cost = if config.compute_direct_baseline {
        Some(crate::cost::direct_cost_baseline(&prepared.scaled.matrix, &perm))
    } else {
        None
    };
    let jacobi_norm = if needs_jacobi_norm {
        let trips: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| {
                system
                    .row(i)
                    .filter(move |&(j, _)| j != i)
                    .map(move |(j, v)| (i, j, -v))
            })
            .collect();
        match SparseMatrix::from_triplets(n, trips) {
            Ok(jac) => {
                Some(jac.estimate_two_norm(config.solver.two_norm_iters, config.solver.two_norm_seed))
            }
            Err(_) => None,
        }
    } else {
        None
    };
    Ok(BlockContext {
        matrix_id: prepared.id.clone(),
        ordering_label: label,
        system,
        unscaled,
        two_norm_est: prepared.two_norm_est,
        jacobi_norm,
        problem,
        direct_cost,
    })
}

fn ingest_failure_record(matrix_id: &str, ordering_label: &str, _msg: &str) -> RunRecord {
    RunRecord {
        matrix_id: matrix_id.to_string(),
        ordering_label: ordering_label.to_string(),
        precond_label: "ingest".to_string(),
        status: RunStatus::IngestFailure,
        iters: None,
        work_to_tol: None,
        generation_cost: None,
        apply_cost: None,
        control_work: None,
    }
}

fn optimal_omega_for(block: &BlockContext) -> Option<f64> {
    let norm_j = block.jacobi_norm?;
    optimal_omega(norm_j).ok()
}

enum BuildOutcome {
    Built(Box<dyn Preconditioner>),
    /// The solve should run against the unscaled system with this operator.
    BuiltUnscaled(Box<dyn Preconditioner>),
    Failed,
}

fn build_operator(block: &BlockContext, spec: &PrecondSpec) -> BuildOutcome {
    match spec {
        PrecondSpec::Control => BuildOutcome::Built(Box::new(build_jacobi_control())),
        PrecondSpec::Tns { terms, alpha } => {
            let cfg = TnsConfig {
                terms: *terms,
                alpha: alpha.alpha(&block.system, block.two_norm_est),
                alpha_label: alpha.label(),
            };
            match build_tns(&block.system, cfg) {
                Ok(op) => BuildOutcome::Built(Box::new(op)),
                Err(_) => BuildOutcome::Failed,
            }
        }
        PrecondSpec::Ssor { sweeps, omega } => {
            let omega_value = match omega {
                OmegaKind::Fixed(w) => *w,
                OmegaKind::Optimal => match optimal_omega_for(block) {
                    // the caller filters undefined cases; a race here means
                    // the closed form left (0,2) and the config is skipped
                    Some(w) => w.clamp(1.0, 2.0 - 1e-12),
                    None => return BuildOutcome::Failed,
                },
            };
            match SsorConfig::new(omega_value, *sweeps)
                .and_then(|cfg| build_ssor(&block.system, cfg))
            {
                Ok(op) => BuildOutcome::Built(Box::new(op)),
                Err(_) => BuildOutcome::Failed,
            }
        }
        PrecondSpec::Sspai { multiplier } => {
            let cfg = SspaiConfig::from_multiplier(&block.system, *multiplier);
            match build_sspai(&block.system, cfg) {
                Ok(op) => BuildOutcome::Built(Box::new(op)),
                Err(_) => BuildOutcome::Failed,
            }
        }
        PrecondSpec::Ic { droptol, modified } => {
            match build_ic(&block.system, *droptol, *modified) {
                Ok(op) => BuildOutcome::Built(Box::new(op)),
                Err(_) => BuildOutcome::Failed,
            }
        }
        PrecondSpec::Laplacian { droptol, lift } => {
            // designation rules: scaled-SDD runs on the scaled system,
            // unscaled-only-SDD on the unscaled system, otherwise lift.
            let class = classify_sdd(&block.unscaled, &block.system);
            match class.status {
                SddStatus::SddAsScaled => {
                    match build_laplacian_pipeline(&block.system, *droptol, false) {
                        Ok(op) => BuildOutcome::Built(Box::new(op)),
                        Err(_) => BuildOutcome::Failed,
                    }
                }
                SddStatus::SddUnscaledOnly => {
                    // this route solves the unscaled system itself, so CG
                    // needs it symmetric as stored
                    if !block.unscaled.is_symmetric() {
                        return BuildOutcome::Failed;
                    }
                    match build_laplacian_pipeline(&block.unscaled, *droptol, false) {
                        Ok(op) => BuildOutcome::BuiltUnscaled(Box::new(op)),
                        Err(_) => BuildOutcome::Failed,
                    }
                }
                SddStatus::NotSdd => {
                    if !lift {
                        return BuildOutcome::Failed;
                    }
                    match build_laplacian_pipeline(&block.system, *droptol, true) {
                        Ok(op) => BuildOutcome::Built(Box::new(op)),
                        Err(_) => BuildOutcome::Failed,
                    }
                }
            }
        }
        PrecondSpec::Lu { label, l_path, diag_path } => {
            let factor = match crate::market::read_matrix_market(l_path) {
                Ok(f) => f,
                Err(_) => return BuildOutcome::Failed,
            };
            let diag = match crate::precond::lu_adapter::load_diagonal(diag_path) {
                Ok(d) => d,
                Err(_) => return BuildOutcome::Failed,
            };
            match crate::precond::symmetrize_lu(&factor, &diag, label.clone()) {
                Ok(op) => BuildOutcome::Built(Box::new(op)),
                Err(_) => BuildOutcome::Failed,
            }
        }
    }
}

fn solve_task(
    config: &BenchmarkConfig,
    block: &BlockContext,
    spec: &PrecondSpec,
    control_work: Option<u64>,
    traces_dir: &Path,
) -> RunRecord {
    let label = spec.label();
    let mut record = RunRecord {
        matrix_id: block.matrix_id.clone(),
        ordering_label: block.ordering_label.clone(),
        precond_label: label.clone(),
        status: RunStatus::GenerationFailure,
        iters: None,
        work_to_tol: None,
        generation_cost: None,
        apply_cost: None,
        control_work,
    };

    let (operator, system, rhs) = match build_operator(block, spec) {
        BuildOutcome::Built(op) => (op, &block.system, block.problem.b.clone()),
        BuildOutcome::BuiltUnscaled(op) => {
            let rhs = block
                .unscaled
                .matvec(&block.problem.x_star)
                .expect("dimensions agree");
            (op, &block.unscaled, rhs)
        }
        BuildOutcome::Failed => return record,
    };

    let n = system.dim();
    let cfg = PcgConfig {
        rel_res_tol: config.solver.rel_res_tol,
        max_iters: config.solver.max_iters_factor * n,
        record_every: config.solver.record_every,
        track_nrbe: config.solver.track_nrbe,
        two_norm_estimate: block.two_norm_est,
    };
    let trace = match pcg(system, &rhs, operator.as_ref(), &cfg, Some(&block.problem.x_star)) {
        Ok(trace) => trace,
        Err(_) => return record,
    };

    record.status = match trace.status {
        SolveStatus::Converged => RunStatus::Converged,
        SolveStatus::MaxIters => RunStatus::MaxIters,
        SolveStatus::Breakdown => RunStatus::Breakdown,
    };
    record.iters = Some(trace.iters as u64);
    record.work_to_tol = trace.work_to_tol;
    record.generation_cost = Some(operator.generation_cost());
    record.apply_cost = Some(operator.apply_cost());
    if matches!(spec, PrecondSpec::Control) {
        record.control_work = trace.work_to_tol;
    }

    if config.record_traces {
        let file_name = format!(
            "{}_{}_{}.jsonl",
            sanitize(&block.matrix_id),
            sanitize(&block.ordering_label),
            sanitize(&label)
        );
        if let Ok(file) = std::fs::File::create(traces_dir.join(file_name)) {
            let _ = write_trace_jsonl(&trace, std::io::BufWriter::new(file));
        }
    }
    record
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}
