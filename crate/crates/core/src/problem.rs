//! Deterministic problem setup: seeded right-hand sides, SDD
//! classification, and the SDD-to-graph-Laplacian augmentation with
//! solution recovery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Xoshiro256PlusPlus;
use crate::sparse::{dot, norm2, SparseError, SparseMatrix};

pub const DEFAULT_SEED: u64 = 123_456_789;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem generation needs n >= 2, got {0}")]
    TooSmall(usize),
    #[error("matrix is not diagonally dominant: row {row} has slack {slack}")]
    NotSdd { row: usize, slack: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Seeded exact-solution problem: sparse ±1 solution stored dense, with
/// b = A·x_star.
#[derive(Clone, Debug)]
pub struct SeededProblem {
    pub x_star: Vec<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
    pub support_size: usize,
}

/// round(log2 n) + 1 with half-up rounding.
pub fn support_size(n: usize) -> usize {
    (n as f64).log2().round() as usize + 1
}

/// Number of warm-up vectors drawn and discarded: round(log2 n).
pub fn warmup_count(n: usize) -> usize {
    (n as f64).log2().round() as usize
}

/// Deterministic right-hand-side generation.
///
/// Draws and discards round(log2 n) uniform vectors of length n, takes the
/// next vector, keeps its round(log2 n)+1 largest-magnitude positions
/// (ties to the lowest index), and sets each kept position to ±1 using one
/// further uniform draw per position in ascending position order
/// (draw < 0.5 gives +1). The rest of the vector is zero and b = A·x_star.
pub fn generate_problem(a: &SparseMatrix, seed: u64) -> Result<SeededProblem, ProblemError> {
    let n = a.dim();
    if n < 2 {
        return Err(ProblemError::TooSmall(n));
    }
    let mut rng = Xoshiro256PlusPlus::new(seed);
    for _ in 0..warmup_count(n) {
        for _ in 0..n {
            rng.next_f64();
        }
    }
    let raw = rng.next_vector(n);
    let k = support_size(n).min(n);
    let mut by_magnitude: Vec<usize> = (0..n).collect();
    by_magnitude.sort_by(|&i, &j| raw[j].abs().total_cmp(&raw[i].abs()).then(i.cmp(&j)));
    let mut kept: Vec<usize> = by_magnitude[..k].to_vec();
    kept.sort_unstable();

    let mut x_star = vec![0.0; n];
    for &i in &kept {
        x_star[i] = if rng.next_f64() < 0.5 { 1.0 } else { -1.0 };
    }
    let b = a.matvec(&x_star)?;
    Ok(SeededProblem { x_star, b, seed, support_size: k })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SddStatus {
    SddAsScaled,
    SddUnscaledOnly,
    NotSdd,
}

/// Three-way diagonal-dominance classification, scaled matrix checked first.
#[derive(Clone, Debug)]
pub struct SddClassification {
    pub status: SddStatus,
    /// Per-row slack a_ii - Σ_{j≠i}|a_ij| on the matrix that determined the
    /// status (the scaled matrix for `NotSdd`).
    pub slack: Vec<f64>,
}

/// Per-row slack of diagonal dominance.
pub fn dominance_slack(a: &SparseMatrix) -> Vec<f64> {
    (0..a.dim())
        .map(|i| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (j, v) in a.row(i) {
                if j == i {
                    diag = v;
                } else {
                    off += v.abs();
                }
            }
            diag - off
        })
        .collect()
}

pub fn is_sdd(a: &SparseMatrix) -> bool {
    dominance_slack(a).iter().all(|&s| s >= 0.0)
}

pub fn classify_sdd(a_unscaled: &SparseMatrix, a_scaled: &SparseMatrix) -> SddClassification {
    let scaled_slack = dominance_slack(a_scaled);
    if scaled_slack.iter().all(|&s| s >= 0.0) {
        return SddClassification { status: SddStatus::SddAsScaled, slack: scaled_slack };
    }
    let unscaled_slack = dominance_slack(a_unscaled);
    if unscaled_slack.iter().all(|&s| s >= 0.0) {
        return SddClassification { status: SddStatus::SddUnscaledOnly, slack: unscaled_slack };
    }
    SddClassification { status: SddStatus::NotSdd, slack: scaled_slack }
}

/// 2n-dimensional graph Laplacian produced by the SDD augmentation.
#[derive(Clone, Debug)]
pub struct AugmentedSystem {
    pub laplacian: SparseMatrix,
    pub n: usize,
}

/// Augment an SDD matrix to a 2n graph Laplacian.
///
/// With P the positive off-diagonal part, N the negative part,
/// D = diag(P·e − N·e) and S = diag(a_ii − d_ii), builds
/// [[D+N+S/2, −(P+S/2)], [−(P+S/2), D+N+S/2]]. Every row sums to zero and
/// all off-diagonal entries are nonpositive.
pub fn augment_to_laplacian(a: &SparseMatrix) -> Result<AugmentedSystem, ProblemError> {
    let n = a.dim();
    let slack = dominance_slack(a);
    if let Some((row, &s)) = slack.iter().enumerate().find(|(_, &s)| s < 0.0) {
        return Err(ProblemError::NotSdd { row, slack: s });
    }
    let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * a.nnz() + 4 * n);
    for i in 0..n {
        let mut abs_off = 0.0;
        for (j, v) in a.row(i) {
            if j == i {
                continue;
            }
            abs_off += v.abs();
            if v < 0.0 {
                trips.push((i, j, v));
                trips.push((n + i, n + j, v));
            } else {
                trips.push((i, n + j, -v));
                trips.push((n + i, j, -v));
            }
        }
        let half_slack = 0.5 * slack[i];
        let diag = abs_off + half_slack;
        if diag != 0.0 {
            trips.push((i, i, diag));
            trips.push((n + i, n + i, diag));
        }
        if half_slack != 0.0 {
            trips.push((i, n + i, -half_slack));
            trips.push((n + i, i, -half_slack));
        }
    }
    Ok(AugmentedSystem { laplacian: SparseMatrix::from_triplets(2 * n, trips)?, n })
}

/// b' = [b; -b].
pub fn augment_rhs(b: &[f64]) -> Vec<f64> {
    b.iter().copied().chain(b.iter().map(|v| -v)).collect()
}

/// x = ((x')_{1:n} − (x')_{n+1:2n}) / 2.
pub fn recover_solution(x_aug: &[f64]) -> Result<Vec<f64>, ProblemError> {
    if !x_aug.len().is_multiple_of(2) {
        return Err(ProblemError::DimensionMismatch { expected: x_aug.len() + 1, got: x_aug.len() });
    }
    let n = x_aug.len() / 2;
    Ok((0..n).map(|i| 0.5 * (x_aug[i] - x_aug[n + i])).collect())
}

/// Raise each diagonal entry to at least the absolute off-diagonal row sum.
pub fn diagonal_lift_to_sdd(a: &SparseMatrix) -> SparseMatrix {
    let n = a.dim();
    let mut trips = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let mut abs_off = 0.0;
        let mut diag = 0.0;
        for (j, v) in a.row(i) {
            if j == i {
                diag = v;
            } else {
                abs_off += v.abs();
                trips.push((i, j, v));
            }
        }
        let lifted = diag.max(abs_off);
        if lifted != 0.0 {
            trips.push((i, i, lifted));
        }
    }
    SparseMatrix::from_triplets(n, trips).expect("indices unchanged")
}

/// Solve the original system through the augmentation: CG on the singular
/// Laplacian with the consistent RHS [b; -b], zero start, and a re-projection
/// against the [e; e] null vector every 50 iterations, then recovery.
pub fn solve_augmented(
    aug: &AugmentedSystem,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>, ProblemError> {
    if b.len() != aug.n {
        return Err(ProblemError::DimensionMismatch { expected: aug.n, got: b.len() });
    }
    let l = &aug.laplacian;
    let m = 2 * aug.n;
    let b_aug = augment_rhs(b);
    let b_norm = norm2(&b_aug);
    if b_norm == 0.0 {
        return Ok(vec![0.0; aug.n]);
    }
    let project = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / m as f64;
        for x in v.iter_mut() {
            *x -= mean;
        }
    };
    let mut x = vec![0.0; m];
    let mut r = b_aug.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for iter in 1..=max_iters {
        let q = l.matvec(&p)?;
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rr / pq;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if iter % 50 == 0 {
            project(&mut x);
            let ax = l.matvec(&x)?;
            r = b_aug.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= rel_tol * b_norm {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
    }
    project(&mut x);
    recover_solution(&x)
}
