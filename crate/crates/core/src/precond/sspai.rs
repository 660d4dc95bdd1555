//! Symmetric sparse approximate inverse.
//!
//! Each column of the candidate inverse K solves a small least-squares
//! problem min ‖A(:,P_j)·m − e_j‖₂ over the k largest-magnitude positions
//! of A's column j (the diagonal is always included), via dense normal
//! equations on the extracted block. K is then symmetrized to (K + Kᵀ)/2.

use thiserror::Error;

use super::Preconditioner;
use crate::sparse::SparseMatrix;

#[derive(Debug, Error)]
pub enum SspaiError {
    #[error("per-column budget must be at least 1")]
    EmptyBudget,
}

#[derive(Clone, Copy, Debug)]
pub struct SspaiConfig {
    pub fill_multiplier: f64,
    /// k = round(multiplier · nnz / n), at least 1.
    pub per_column_budget: usize,
}

impl SspaiConfig {
    pub fn from_multiplier(a: &SparseMatrix, fill_multiplier: f64) -> Self {
        let avg = a.nnz() as f64 / a.dim() as f64;
        let k = (fill_multiplier * avg).round() as usize;
        Self { fill_multiplier, per_column_budget: k.max(1) }
    }
}

pub struct SspaiOperator {
    k_matrix: SparseMatrix,
    fallback_columns: usize,
    label: String,
}

impl SspaiOperator {
    pub fn approximate_inverse(&self) -> &SparseMatrix {
        &self.k_matrix
    }

    /// Columns that fell back to m = e_j / a_jj because the local block was
    /// rank deficient even after jitter.
    pub fn fallback_columns(&self) -> usize {
        self.fallback_columns
    }
}

impl Preconditioner for SspaiOperator {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.k_matrix.matvec(r).expect("dimension fixed at build")
    }

    fn apply_cost(&self) -> u64 {
        self.k_matrix.nnz() as u64
    }

    fn config_label(&self) -> &str {
        &self.label
    }
}

pub fn build_sspai(a: &SparseMatrix, cfg: SspaiConfig) -> Result<SspaiOperator, SspaiError> {
    if cfg.per_column_budget == 0 {
        return Err(SspaiError::EmptyBudget);
    }
    let n = a.dim();
    let k = cfg.per_column_budget;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut fallbacks = 0usize;

    for j in 0..n {
        // Column j of a symmetric matrix is row j.
        let mut entries: Vec<(usize, f64)> = a.row(j).collect();
        // largest magnitudes first, ties by lowest index, diagonal forced in
        entries.sort_by(|x, y| {
            (x.0 == j)
                .cmp(&(y.0 == j))
                .reverse()
                .then(y.1.abs().total_cmp(&x.1.abs()))
                .then(x.0.cmp(&y.0))
        });
        entries.truncate(k);
        let mut support: Vec<usize> = entries.iter().map(|&(i, _)| i).collect();
        if !support.contains(&j) {
            support.push(j);
        }
        support.sort_unstable();

        match solve_column(a, j, &support) {
            Some(col) => {
                for (idx, &row) in support.iter().enumerate() {
                    if col[idx] != 0.0 {
                        trips.push((row, j, col[idx]));
                    }
                }
            }
            None => {
                fallbacks += 1;
                let ajj = a.get(j, j);
                let v = if ajj != 0.0 { 1.0 / ajj } else { 1.0 };
                trips.push((j, j, v));
            }
        }
    }

    // K <- (K + Kᵀ)/2, assembled in one pass.
    let sym_trips: Vec<(usize, usize, f64)> = trips
        .iter()
        .flat_map(|&(i, j, v)| [(i, j, 0.5 * v), (j, i, 0.5 * v)])
        .collect();
    let k_matrix = SparseMatrix::from_triplets(n, sym_trips).expect("indices in range");
    let label = format!("sspai:fill={}", cfg.fill_multiplier);
    Ok(SspaiOperator { k_matrix, fallback_columns: fallbacks, label })
}

/// Least squares for one column over the support pattern, by normal
/// equations with a 1e-12 diagonal jitter retry on singular blocks.
fn solve_column(a: &SparseMatrix, j: usize, support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    // Gram matrix G = BᵀB where B = A(:, support); since A is symmetric,
    // column p of B is row support[p], and G_pq = Σ_i A(i,p')A(i,q').
    let mut gram = vec![vec![0.0f64; k]; k];
    for p in 0..k {
        for q in p..k {
            let mut acc = 0.0;
            // sparse dot of rows support[p] and support[q]
            let mut it_q = a.row(support[q]).peekable();
            for (ip, vp) in a.row(support[p]) {
                while let Some(&(iq, _)) = it_q.peek() {
                    if iq < ip {
                        it_q.next();
                    } else {
                        break;
                    }
                }
                if let Some(&(iq, vq)) = it_q.peek() {
                    if iq == ip {
                        acc += vp * vq;
                    }
                }
            }
            gram[p][q] = acc;
            gram[q][p] = acc;
        }
    }
    // rhs = Bᵀ e_j = A(j, support)
    let rhs: Vec<f64> = support.iter().map(|&p| a.get(j, p)).collect();

    if let Some(sol) = spd_solve(&gram, &rhs) {
        return Some(sol);
    }
    let mut jittered = gram;
    for (p, row) in jittered.iter_mut().enumerate() {
        row[p] += 1e-12;
    }
    spd_solve(&jittered, &rhs)
}

fn spd_solve(g: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = g.len();
    let mut l = vec![vec![0.0f64; k]; k];
    for c in 0..k {
        let mut d = g[c][c];
        for t in 0..c {
            d -= l[c][t] * l[c][t];
        }
        if d <= 0.0 {
            return None;
        }
        l[c][c] = d.sqrt();
        for r in (c + 1)..k {
            let mut v = g[r][c];
            for t in 0..c {
                v -= l[r][t] * l[c][t];
            }
            l[r][c] = v / l[c][c];
        }
    }
    let mut y = rhs.to_vec();
    for r in 0..k {
        for t in 0..r {
            let tmp = y[t];
            y[r] -= l[r][t] * tmp;
        }
        y[r] /= l[r][r];
    }
    for r in (0..k).rev() {
        for t in (r + 1)..k {
            let tmp = y[t];
            y[r] -= l[t][r] * tmp;
        }
        y[r] /= l[r][r];
    }
    Some(y)
}
