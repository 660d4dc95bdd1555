//! Incomplete Cholesky: IC(0) pattern mode, threshold dropping, and the
//! modified (diagonal-compensated) variants.
//!
//! Left-looking column factorization. A computed subdiagonal value in
//! column j is dropped when |value| < droptol·‖A(:,j)‖₁ (threshold mode)
//! or when its position lies outside tril(A) (pattern mode, droptol = 0).
//! Modified mode compensates the diagonal so the factorization preserves
//! the action on the all-ones vector: the signed sum of a column's dropped
//! values is folded into its pivot, and each dropped value is folded into
//! the pending diagonal of its row. A nonpositive pivot is a recorded
//! generation failure, not a panic.

use thiserror::Error;

use super::Preconditioner;
use crate::sparse::{lower_tri_solve, lower_tri_transpose_solve, SparseMatrix};

#[derive(Clone, Copy, Debug, Error)]
#[error("incomplete Cholesky breakdown at column {column}: pivot {value}")]
pub struct GenerationFailure {
    pub column: usize,
    pub value: f64,
}

/// How a collapsed pivot is handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PivotPolicy {
    /// Nonpositive pivot is a generation failure.
    Strict,
    /// A pivot at or below the floor is pinned to the column's original
    /// diagonal magnitude and the remaining subcolumn dropped. Keeps the
    /// factor positive definite on structurally singular inputs such as
    /// graph Laplacians, where every connected component ends in one
    /// exactly-zero pivot.
    PinSemidefinite,
}

#[derive(Debug)]
pub struct IcFactor {
    l: SparseMatrix,
    droptol: f64,
    modified: bool,
    fill_ratio: f64,
    col_counts: Vec<usize>,
    apply_cost: u64,
    generation_cost: u64,
    pinned_columns: usize,
    label: String,
}

impl IcFactor {
    pub fn factor(&self) -> &SparseMatrix {
        &self.l
    }

    pub fn droptol(&self) -> f64 {
        self.droptol
    }

    pub fn is_modified(&self) -> bool {
        self.modified
    }

    pub fn fill_ratio(&self) -> f64 {
        self.fill_ratio
    }

    /// Entries per column of L, diagonal included.
    pub fn col_counts(&self) -> &[usize] {
        &self.col_counts
    }

    /// Columns whose pivot was pinned under the semidefinite policy.
    pub fn pinned_columns(&self) -> usize {
        self.pinned_columns
    }
}

impl Preconditioner for IcFactor {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let y = lower_tri_solve(&self.l, r).expect("factor has positive diagonal");
        lower_tri_transpose_solve(&self.l, &y).expect("factor has positive diagonal")
    }

    fn apply_cost(&self) -> u64 {
        self.apply_cost
    }

    fn generation_cost(&self) -> u64 {
        self.generation_cost
    }

    fn config_label(&self) -> &str {
        &self.label
    }
}

/// Threshold / IC(0) incomplete Cholesky. `droptol == 0` selects the
/// pattern mode fixed to tril(A).
pub fn build_ic(a: &SparseMatrix, droptol: f64, modified: bool) -> Result<IcFactor, GenerationFailure> {
    factorize(a, droptol, modified, PivotPolicy::Strict)
}

/// Semidefinite-tolerant variant used on augmented graph Laplacians.
pub(crate) fn build_ic_semidefinite(
    a: &SparseMatrix,
    droptol: f64,
    modified: bool,
) -> Result<IcFactor, GenerationFailure> {
    factorize(a, droptol, modified, PivotPolicy::PinSemidefinite)
}

fn factorize(
    a: &SparseMatrix,
    droptol: f64,
    modified: bool,
    policy: PivotPolicy,
) -> Result<IcFactor, GenerationFailure> {
    let n = a.dim();
    let pattern_mode = droptol == 0.0;

    // Column 1-norms of A, the threshold reference.
    let mut col_norms = vec![0.0f64; n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            col_norms[j] += v.abs();
        }
    }

    // Finished columns of L in split storage.
    let mut col_rows: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut col_vals: Vec<Vec<f64>> = Vec::with_capacity(n);
    // rowlist[j]: finished columns whose next unconsumed entry sits in row j.
    let mut rowlist: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cursor: Vec<usize> = Vec::with_capacity(n);

    // Dense workspace with a stamp-marked pattern.
    let mut work = vec![0.0f64; n];
    let mut stamp = vec![usize::MAX; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut diag_comp = vec![0.0f64; n];

    let mut tril_nnz = 0usize;
    let mut nnz_l = 0usize;
    let mut pinned = 0usize;
    let mut col_counts = Vec::with_capacity(n);

    for j in 0..n {
        pattern.clear();
        let mut diag_val = diag_comp[j];
        // A(j:, j) by symmetry is the tail of row j.
        for (i, v) in a.row(j) {
            if i > j {
                work[i] = v;
                stamp[i] = j;
                pattern.push(i);
            } else if i == j {
                diag_val += v;
                tril_nnz += 1;
            }
        }
        tril_nnz += pattern.len();

        // Left-looking updates from every finished column k with L(j,k) != 0.
        let updates = std::mem::take(&mut rowlist[j]);
        for k in updates {
            let rows = &col_rows[k];
            let vals = &col_vals[k];
            let c = cursor[k];
            debug_assert_eq!(rows[c], j);
            let ljk = vals[c];
            diag_val -= ljk * ljk;
            for idx in (c + 1)..rows.len() {
                let i = rows[idx];
                let contribution = ljk * vals[idx];
                if stamp[i] == j {
                    work[i] -= contribution;
                } else {
                    work[i] = -contribution;
                    stamp[i] = j;
                    pattern.push(i);
                }
            }
            cursor[k] = c + 1;
            if c + 1 < rows.len() {
                rowlist[rows[c + 1]].push(k);
            }
        }

        // Drop decisions over the candidate subcolumn.
        pattern.sort_unstable();
        let threshold = droptol * col_norms[j];
        let mut kept_rows: Vec<usize> = Vec::with_capacity(pattern.len());
        let mut kept_vals: Vec<f64> = Vec::with_capacity(pattern.len());
        let mut dropped_sum = 0.0f64;
        for &i in &pattern {
            let v = work[i];
            let keep = if pattern_mode { a.get(i, j) != 0.0 } else { v.abs() >= threshold };
            if keep && v != 0.0 {
                kept_rows.push(i);
                kept_vals.push(v);
            } else {
                dropped_sum += v;
                if modified {
                    diag_comp[i] += v;
                }
            }
        }
        if modified {
            diag_val += dropped_sum;
        }

        let floor = 1e-8 * col_norms[j].max(f64::MIN_POSITIVE);
        let mut pivot = diag_val;
        if policy == PivotPolicy::PinSemidefinite && pivot <= floor {
            // Pin to the original diagonal magnitude and decouple the rest
            // of the column; the factor stays positive definite.
            pivot = a.get(j, j).abs().max(1.0);
            kept_rows.clear();
            kept_vals.clear();
            pinned += 1;
        }
        if pivot <= 0.0 {
            return Err(GenerationFailure { column: j, value: pivot });
        }
        let lambda = pivot.sqrt();
        for v in kept_vals.iter_mut() {
            *v /= lambda;
        }

        col_counts.push(1 + kept_rows.len());
        nnz_l += 1 + kept_rows.len();
        let col_index = col_rows.len();
        let mut rows = Vec::with_capacity(1 + kept_rows.len());
        let mut vals = Vec::with_capacity(1 + kept_vals.len());
        rows.push(j);
        vals.push(lambda);
        rows.extend_from_slice(&kept_rows);
        vals.extend_from_slice(&kept_vals);
        if rows.len() > 1 {
            rowlist[rows[1]].push(col_index);
        }
        cursor.push(1);
        col_rows.push(rows);
        col_vals.push(vals);
    }

    let trips = col_rows
        .iter()
        .zip(&col_vals)
        .enumerate()
        .flat_map(|(j, (rows, vals))| {
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
        .collect::<Vec<_>>();
    let l = SparseMatrix::from_triplets(n, trips).expect("indices in range");

    let generation_cost = col_counts.iter().map(|&c| (c * c) as u64).sum();
    let mode = if pattern_mode { "0".to_string() } else { format!(":droptol={droptol:e}") };
    let label = format!("{}{}", if modified { "mic" } else { "ic" }, mode);
    Ok(IcFactor {
        apply_cost: 2 * nnz_l as u64,
        generation_cost,
        fill_ratio: nnz_l as f64 / tril_nnz.max(1) as f64,
        droptol,
        modified,
        col_counts,
        pinned_columns: pinned,
        label,
        l,
    })
}
