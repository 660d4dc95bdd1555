//! Deterministic test-matrix generators.

use thiserror::Error;

use crate::rng::Xoshiro256PlusPlus;
use crate::sparse::SparseMatrix;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator size: {0}")]
    InvalidSize(String),
}

/// k² x k² five-point stencil: diagonal 4, grid neighbors -1.
pub fn poisson2d(k: usize) -> Result<SparseMatrix, GenError> {
    if k == 0 {
        return Err(GenError::InvalidSize("poisson2d requires k >= 1".into()));
    }
    let n = k * k;
    let idx = |r: usize, c: usize| r * k + c;
    let mut trips = Vec::with_capacity(5 * n);
    for r in 0..k {
        for c in 0..k {
            let i = idx(r, c);
            trips.push((i, i, 4.0));
            if r > 0 {
                trips.push((i, idx(r - 1, c), -1.0));
            }
            if r + 1 < k {
                trips.push((i, idx(r + 1, c), -1.0));
            }
            if c > 0 {
                trips.push((i, idx(r, c - 1), -1.0));
            }
            if c + 1 < k {
                trips.push((i, idx(r, c + 1), -1.0));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, trips).expect("indices in range"))
}

/// Tridiagonal (2, -1) stencil.
pub fn tridiag(n: usize) -> Result<SparseMatrix, GenError> {
    if n == 0 {
        return Err(GenError::InvalidSize("tridiag requires n >= 1".into()));
    }
    let mut trips = Vec::with_capacity(3 * n);
    for i in 0..n {
        trips.push((i, i, 2.0));
        if i + 1 < n {
            trips.push((i, i + 1, -1.0));
            trips.push((i + 1, i, -1.0));
        }
    }
    Ok(SparseMatrix::from_triplets(n, trips).expect("indices in range"))
}

/// Random symmetric diagonally dominant matrix: random off-diagonal pattern
/// at roughly the requested density, diagonal set to the absolute row sum
/// plus a positive margin. Always SDD by construction.
pub fn random_sdd(n: usize, density: f64, seed: u64) -> Result<SparseMatrix, GenError> {
    if n == 0 {
        return Err(GenError::InvalidSize("random_sdd requires n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(GenError::InvalidSize(format!("density {density} outside [0,1]")));
    }
    let mut rng = Xoshiro256PlusPlus::new(seed);
    let mut trips = Vec::new();
    let mut row_abs = vec![0.0f64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.next_f64() < density {
                let v = rng.next_f64() * 2.0 - 1.0;
                if v != 0.0 {
                    trips.push((i, j, v));
                    trips.push((j, i, v));
                    row_abs[i] += v.abs();
                    row_abs[j] += v.abs();
                }
            }
        }
    }
    for (i, s) in row_abs.iter().enumerate() {
        trips.push((i, i, s + 0.5 + rng.next_f64()));
    }
    Ok(SparseMatrix::from_triplets(n, trips).expect("indices in range"))
}
