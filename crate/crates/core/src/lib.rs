//! Benchmarking toolkit for preconditioned conjugate-gradient solution of
//! sparse symmetric positive definite systems.
//!
//! The pipeline: ingest a matrix, symmetrically scale it to unit diagonal,
//! reorder, generate a seeded right-hand side, run instrumented PCG under a
//! grid of preconditioner configurations, and aggregate the work-to-tolerance
//! outcomes into performance profiles and summary statistics. Work is counted
//! in exact operation units — (5n + nnz + preconditioner) per iteration —
//! so results are bit-reproducible across machines.

pub mod cost;
pub mod dense;
pub mod fetch;
pub mod gen;
pub mod harness;
pub mod market;
pub mod ordering;
pub mod precond;
pub mod problem;
pub mod profile;
pub mod report;
pub mod rng;
pub mod solver;
pub mod sparse;
pub mod svg;

pub use cost::{direct_cost_baseline, generation_cost, total_work, ColumnCounts};
pub use harness::{run_benchmark, BenchmarkConfig, RunManifest, RunOutcome};
pub use market::{read_matrix_market, write_matrix_market};
pub use report::{make_report, ReportMode};
pub use ordering::{load_permutation, permute_symmetric, rcm_order, Permutation};
pub use problem::{
    augment_rhs, augment_to_laplacian, classify_sdd, diagonal_lift_to_sdd, generate_problem,
    recover_solution, SddStatus, SeededProblem,
};
pub use profile::{auc, build_profile, summary_stats, Baseline, PerformanceProfile, RunRecord, RunStatus};
pub use solver::{pcg, PcgConfig, SolveStatus, SolveTrace};
pub use sparse::{lower_tri_solve, scale_and_symmetrize, upper_tri_solve, ScaledSystem, SparseMatrix};
