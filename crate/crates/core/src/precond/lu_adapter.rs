//! Symmetrization adapter for externally computed ILU factors:
//! L' = L·diag(U)^{1/2}, M = L'L'ᵀ.
//!
//! The factors come from files produced by an outside factorization; rows
//! of L with no stored diagonal are treated as unit-diagonal.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use super::Preconditioner;
use crate::sparse::{lower_tri_solve, lower_tri_transpose_solve, SparseMatrix};

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("diagU entry {value} at position {index} is not positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("diagU has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("factor entry ({i},{j}) above the diagonal")]
    NotLowerTriangular { i: usize, j: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("diagU file line {line}: not a number: {text}")]
    Parse { line: usize, text: String },
}

pub struct LuAdapter {
    l_scaled: SparseMatrix,
    apply_cost: u64,
    label: String,
}

impl LuAdapter {
    pub fn scaled_factor(&self) -> &SparseMatrix {
        &self.l_scaled
    }
}

impl Preconditioner for LuAdapter {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let y = lower_tri_solve(&self.l_scaled, r).expect("positive diagonal checked at build");
        lower_tri_transpose_solve(&self.l_scaled, &y).expect("positive diagonal checked at build")
    }

    fn apply_cost(&self) -> u64 {
        self.apply_cost
    }

    fn config_label(&self) -> &str {
        &self.label
    }
}

/// Build M = L'L'ᵀ with L' = L·diag(diagU)^{1/2}.
pub fn symmetrize_lu(
    l: &SparseMatrix,
    diag_u: &[f64],
    label: impl Into<String>,
) -> Result<LuAdapter, AdapterError> {
    let n = l.dim();
    if diag_u.len() != n {
        return Err(AdapterError::WrongLength { expected: n, got: diag_u.len() });
    }
    for (index, &value) in diag_u.iter().enumerate() {
        if !(value > 0.0) {
            return Err(AdapterError::NonPositiveDiagonal { index, value });
        }
    }
    let sqrt_d: Vec<f64> = diag_u.iter().map(|v| v.sqrt()).collect();
    let mut trips = Vec::with_capacity(l.nnz() + n);
    let mut has_diag = vec![false; n];
    for i in 0..n {
        for (j, v) in l.row(i) {
            if j > i {
                return Err(AdapterError::NotLowerTriangular { i, j });
            }
            if j == i {
                has_diag[i] = true;
            }
            trips.push((i, j, v * sqrt_d[j]));
        }
    }
    for i in 0..n {
        if !has_diag[i] {
            trips.push((i, i, sqrt_d[i]));
        }
    }
    let l_scaled = SparseMatrix::from_triplets(n, trips).expect("indices unchanged");
    Ok(LuAdapter {
        apply_cost: 2 * l_scaled.nnz() as u64,
        l_scaled,
        label: label.into(),
    })
}

/// One value per line.
pub fn load_diagonal(path: impl AsRef<Path>) -> Result<Vec<f64>, AdapterError> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed
            .parse()
            .map_err(|_| AdapterError::Parse { line: idx + 1, text: trimmed.to_string() })?;
        out.push(v);
    }
    Ok(out)
}
