//! Compressed-row sparse matrix storage and kernels.
//!
//! Symmetric matrices store both triangles in full, so a matrix-vector
//! product costs exactly nnz multiply-adds — the unit of the work model.
//! Explicit zeros are dropped at construction for the same reason.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: matrix is {rows}x{cols}, operand has length {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
    #[error("triplet index ({i},{j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("row {row} has no diagonal entry")]
    MissingDiagonal { row: usize },
    #[error("diagonal entry {value} at row {row} is not positive")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("singular triangular factor: zero diagonal at row {row}")]
    SingularFactor { row: usize },
    #[error("matrix is not lower triangular at entry ({i},{j})")]
    NotLowerTriangular { i: usize, j: usize },
    #[error("matrix is not upper triangular at entry ({i},{j})")]
    NotUpperTriangular { i: usize, j: usize },
}

/// Square sparse matrix in compressed-row form.
///
/// Invariants: `row_ptr` is nondecreasing with `row_ptr[0] == 0` and
/// `row_ptr[n] == nnz`; column indices strictly increase within a row; no
/// stored zeros. When `symmetric` is set, every stored (i,j,v) has its
/// mirror (j,i,v) stored too.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Build from (i, j, value) triplets. Duplicates are summed in input
    /// order; exact zeros (including zero-summed duplicates) are dropped.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(SparseError::IndexOutOfRange { i, j, n });
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut k = 0;
        while k < entries.len() {
            let (i, j, mut v) = entries[k];
            k += 1;
            while k < entries.len() && entries[k].0 == i && entries[k].1 == j {
                v += entries[k].2;
                k += 1;
            }
            if v != 0.0 {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self { n, row_ptr, col_idx, values, symmetric: false };
        m.symmetric = m.is_symmetric_bitexact();
        Ok(m)
    }

    /// n x n identity.
    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0))).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// (column, value) pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Stored value at (i, j), or 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    fn is_symmetric_bitexact(&self) -> bool {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j != i && self.get(j, i) != v {
                    return false;
                }
            }
        }
        true
    }

    /// y = A x, costing nnz multiply-adds.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.n {
            return Err(SparseError::DimensionMismatch { rows: self.n, cols: self.n, len: x.len() });
        }
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Transpose (exact copy of values, mirrored pattern).
    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.n, trips).unwrap()
    }

    /// Frobenius, 1- and infinity norms (exact).
    pub fn norms(&self) -> MatrixNorms {
        let mut fro = 0.0;
        let mut row_sums = vec![0.0; self.n];
        let mut col_sums = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                fro += v * v;
                row_sums[i] += v.abs();
                col_sums[j] += v.abs();
            }
        }
        MatrixNorms {
            fro: fro.sqrt(),
            one: col_sums.iter().cloned().fold(0.0, f64::max),
            inf: row_sums.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Power-iteration estimate of the spectral norm of a symmetric matrix.
    ///
    /// Deterministic seeded start; stops when the relative change of the
    /// estimate stays below `tol` on two consecutive iterations, or at the
    /// iteration cap, returning the best value so far.
    pub fn estimate_two_norm(&self, max_iters: usize, seed: u64) -> f64 {
        let tol = 1e-6;
        let mut rng = crate::rng::Xoshiro256PlusPlus::new(seed);
        let mut x: Vec<f64> = (0..self.n).map(|_| rng.next_f64() - 0.5).collect();
        let norm0 = norm2(&x);
        if norm0 == 0.0 || self.nnz() == 0 {
            return 0.0;
        }
        for v in x.iter_mut() {
            *v /= norm0;
        }
        let mut estimate = 0.0;
        let mut calm_checks = 0;
        for _ in 0..max_iters {
            let y = self.matvec(&x).expect("dimension fixed");
            let ny = norm2(&y);
            if ny == 0.0 {
                return 0.0;
            }
            let change = (ny - estimate).abs();
            estimate = ny;
            if change <= tol * estimate.max(f64::MIN_POSITIVE) {
                calm_checks += 1;
                if calm_checks >= 2 {
                    break;
                }
            } else {
                calm_checks = 0;
            }
            x = y;
            for v in x.iter_mut() {
                *v /= ny;
            }
        }
        estimate
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MatrixNorms {
    pub fro: f64,
    pub one: f64,
    pub inf: f64,
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solve L y = b for lower-triangular L (diagonal included in the pattern).
/// Costs nnz(L) operations.
pub fn lower_tri_solve(l: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SparseError> {
    let n = l.dim();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch { rows: n, cols: n, len: b.len() });
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut diag = 0.0;
        let mut acc = y[i];
        for (j, v) in l.row(i) {
            if j < i {
                acc -= v * y[j];
            } else if j == i {
                diag = v;
            } else {
                return Err(SparseError::NotLowerTriangular { i, j });
            }
        }
        if diag == 0.0 {
            return Err(SparseError::SingularFactor { row: i });
        }
        y[i] = acc / diag;
    }
    Ok(y)
}

/// Solve U y = b for upper-triangular U. Costs nnz(U) operations.
pub fn upper_tri_solve(u: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SparseError> {
    let n = u.dim();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch { rows: n, cols: n, len: b.len() });
    }
    let mut y = b.to_vec();
    for i in (0..n).rev() {
        let mut diag = 0.0;
        let mut acc = y[i];
        for (j, v) in u.row(i) {
            if j > i {
                acc -= v * y[j];
            } else if j == i {
                diag = v;
            } else {
                return Err(SparseError::NotUpperTriangular { i, j });
            }
        }
        if diag == 0.0 {
            return Err(SparseError::SingularFactor { row: i });
        }
        y[i] = acc / diag;
    }
    Ok(y)
}

/// Solve Lᵀ y = b given lower-triangular L in row form, without
/// materializing the transpose. Costs nnz(L) operations.
pub fn lower_tri_transpose_solve(l: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SparseError> {
    let n = l.dim();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch { rows: n, cols: n, len: b.len() });
    }
    let mut y = b.to_vec();
    for i in (0..n).rev() {
        let diag = l.get(i, i);
        if diag == 0.0 {
            return Err(SparseError::SingularFactor { row: i });
        }
        y[i] /= diag;
        let yi = y[i];
        for (j, v) in l.row(i) {
            if j < i {
                y[j] -= v * yi;
            }
        }
    }
    Ok(y)
}

/// Unit-diagonal symmetrized system: A'' = (D^{-1/2} A D^{-1/2} + transpose)/2
/// with the diagonal explicitly set to one, plus the scale D^{1/2} used.
#[derive(Clone, Debug)]
pub struct ScaledSystem {
    pub matrix: SparseMatrix,
    /// Diagonal of D^{1/2}.
    pub scale: Vec<f64>,
    pub original_diag: Vec<f64>,
}

/// Symmetric diagonal scaling followed by symmetrization.
///
/// Rejects any matrix with a missing or nonpositive diagonal entry: such a
/// matrix cannot be SPD.
pub fn scale_and_symmetrize(a: &SparseMatrix) -> Result<ScaledSystem, SparseError> {
    let n = a.dim();
    let mut scale = vec![0.0; n];
    let mut original_diag = vec![0.0; n];
    for i in 0..n {
        let d = a.get(i, i);
        if d == 0.0 {
            return Err(SparseError::MissingDiagonal { row: i });
        }
        if d <= 0.0 {
            return Err(SparseError::NonPositiveDiagonal { row: i, value: d });
        }
        original_diag[i] = d;
        scale[i] = d.sqrt();
    }
    // Scale, average each off-diagonal pair, and pin the diagonal to 1.
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..n {
        triplets.push((i, i, 1.0));
        for (j, v) in a.row(i) {
            if j == i {
                continue;
            }
            let scaled = v / (scale[i] * scale[j]);
            let mirrored = a.get(j, i) / (scale[j] * scale[i]);
            let avg = 0.5 * (scaled + mirrored);
            if avg != 0.0 {
                triplets.push((i, j, avg));
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(n, triplets)?;
    debug_assert!(matrix.is_symmetric());
    Ok(ScaledSystem { matrix, scale, original_diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::rng::Xoshiro256PlusPlus;
    use proptest::prelude::*;

    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        crate::gen::random_sdd(n, 0.2, seed).unwrap()
    }

    #[test]
    fn matvec_identity() {
        let a = SparseMatrix::identity(3);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_row_sums() {
        let a = SparseMatrix::from_triplets(
            2,
            [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
        )
        .unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let a = random_spd(50, 7);
        let mut rng = Xoshiro256PlusPlus::new(99);
        let x: Vec<f64> = (0..50).map(|_| rng.next_f64() - 0.5).collect();
        let sparse = a.matvec(&x).unwrap();
        let densemat = dense::to_dense(&a);
        let exact = dense::dense_matvec(&densemat, &x);
        let err = sparse
            .iter()
            .zip(&exact)
            .map(|(s, e)| (s - e).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-13, "max abs diff {err}");
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(a.matvec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn matvec_linearity() {
        let a = random_spd(40, 3);
        let mut rng = Xoshiro256PlusPlus::new(5);
        for _ in 0..10 {
            let x: Vec<f64> = (0..40).map(|_| rng.next_f64() - 0.5).collect();
            let y: Vec<f64> = (0..40).map(|_| rng.next_f64() - 0.5).collect();
            let (alpha, beta) = (rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 4.0 - 2.0);
            let mix: Vec<f64> = x.iter().zip(&y).map(|(a_, b_)| alpha * a_ + beta * b_).collect();
            let lhs = a.matvec(&mix).unwrap();
            let ax = a.matvec(&x).unwrap();
            let ay = a.matvec(&y).unwrap();
            let scale = norm2(&lhs).max(1.0);
            for i in 0..40 {
                assert!((lhs[i] - (alpha * ax[i] + beta * ay[i])).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn triangular_matrix_is_not_symmetric() {
        let l = SparseMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(!l.is_symmetric());
        let sym = SparseMatrix::from_triplets(
            2,
            [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert!(sym.is_symmetric());
    }

    #[test]
    fn tri_solve_diagonal() {
        let l = SparseMatrix::from_triplets(2, [(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(lower_tri_solve(&l, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn tri_solve_forward_substitution() {
        let l = SparseMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(lower_tri_solve(&l, &[1.0, 2.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn tri_solve_matches_dense_oracle() {
        // Random unit-lower factor with a sprinkle of subdiagonal entries.
        let n = 30;
        let mut rng = Xoshiro256PlusPlus::new(11);
        let mut trips = vec![];
        for i in 0..n {
            trips.push((i, i, 1.0));
            for j in 0..i {
                if rng.next_f64() < 0.2 {
                    trips.push((i, j, rng.next_f64() - 0.5));
                }
            }
        }
        let l = SparseMatrix::from_triplets(n, trips).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let y = lower_tri_solve(&l, &b).unwrap();
        let exact = dense::lu_solve(&dense::to_dense(&l), &b).unwrap();
        for i in 0..n {
            assert!((y[i] - exact[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn tri_solve_zero_diagonal_is_singular() {
        let l = SparseMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            lower_tri_solve(&l, &[1.0, 1.0]),
            Err(SparseError::SingularFactor { row: 1 })
        ));
    }

    #[test]
    fn tri_solve_roundtrip_reproduces_b() {
        let a = random_spd(25, 17);
        let l = crate::precond::ic::build_ic(&a, 1e-12, false).unwrap();
        let mut rng = Xoshiro256PlusPlus::new(2);
        let b: Vec<f64> = (0..25).map(|_| rng.next_f64() - 0.5).collect();
        let y = lower_tri_solve(l.factor(), &b).unwrap();
        let back = l.factor().matvec(&y).unwrap();
        let scale = norm2(&b);
        for i in 0..25 {
            assert!((back[i] - b[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn upper_and_transpose_solves_agree() {
        let n = 20;
        let mut rng = Xoshiro256PlusPlus::new(23);
        let mut trips = vec![];
        for i in 0..n {
            trips.push((i, i, 1.0 + rng.next_f64()));
            for j in 0..i {
                if rng.next_f64() < 0.3 {
                    trips.push((i, j, rng.next_f64() - 0.5));
                }
            }
        }
        let l = SparseMatrix::from_triplets(n, trips).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let via_transpose = upper_tri_solve(&l.transpose(), &b).unwrap();
        let direct = lower_tri_transpose_solve(&l, &b).unwrap();
        for i in 0..n {
            assert!((via_transpose[i] - direct[i]).abs() <= 1e-13);
        }
    }

    #[test]
    fn scale_diagonal_matrix_gives_identity() {
        let a = SparseMatrix::from_triplets(2, [(0, 0, 4.0), (1, 1, 9.0)]).unwrap();
        let sys = scale_and_symmetrize(&a).unwrap();
        assert_eq!(sys.matrix, SparseMatrix::identity(2));
        assert_eq!(sys.scale, vec![2.0, 3.0]);
    }

    #[test]
    fn scale_off_diagonal_hand_case() {
        let a = SparseMatrix::from_triplets(2, [(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 9.0)])
            .unwrap();
        let sys = scale_and_symmetrize(&a).unwrap();
        assert!((sys.matrix.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sys.matrix.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        assert_eq!(sys.matrix.get(1, 1), 1.0);
    }

    #[test]
    fn scale_rejects_nonpositive_diagonal() {
        let a = SparseMatrix::from_triplets(2, [(0, 0, -1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            scale_and_symmetrize(&a),
            Err(SparseError::NonPositiveDiagonal { row: 0, .. })
        ));
        let missing = SparseMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            scale_and_symmetrize(&missing),
            Err(SparseError::MissingDiagonal { row: 0 })
        ));
    }

    #[test]
    fn norms_identity() {
        let a = SparseMatrix::identity(5);
        let norms = a.norms();
        assert!((norms.fro - 5.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(norms.one, 1.0);
        assert_eq!(norms.inf, 1.0);
        assert!((a.estimate_two_norm(100, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_norm_of_diagonal_spectrum() {
        let a =
            SparseMatrix::from_triplets(3, [(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let est = a.estimate_two_norm(10_000, 1);
        assert!((est - 3.0).abs() <= 1e-6, "estimate {est}");
    }

    #[test]
    fn two_norm_matches_dense_eigensolver() {
        let a = random_spd(40, 31);
        let est = a.estimate_two_norm(50_000, 1);
        let eigs = dense::sym_eigenvalues(&dense::to_dense(&a));
        let exact = eigs.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
        assert!((est - exact).abs() <= 1e-4 * exact, "est {est} vs exact {exact}");
    }

    proptest! {
        #[test]
        fn scaled_system_has_unit_diag_and_exact_symmetry(seed in 0u64..500) {
            let a = crate::gen::random_sdd(12, 0.4, seed).unwrap();
            let sys = scale_and_symmetrize(&a).unwrap();
            for i in 0..12 {
                prop_assert_eq!(sys.matrix.get(i, i), 1.0);
                prop_assert!(sys.scale[i] > 0.0);
                for (j, v) in sys.matrix.row(i) {
                    prop_assert_eq!(sys.matrix.get(j, i), v);
                }
            }
        }
    }
}
