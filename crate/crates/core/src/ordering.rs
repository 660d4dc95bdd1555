//! Symmetric permutations: reverse Cuthill–McKee, external permutation
//! files (AMD is consumed, not constructed), and permutation application.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum OrderingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("permutation file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("permutation has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("permutation entry {value} out of range for n={n}")]
    OutOfRange { value: i64, n: usize },
    #[error("permutation is not a bijection (index {index} repeated or missing)")]
    NotBijection { index: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Symmetric reordering. `perm` maps new position -> old index,
/// `inv` maps old index -> new position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inv: Vec<usize>,
    label: String,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let perm: Vec<usize> = (0..n).collect();
        Self { inv: perm.clone(), perm, label: "natural".into() }
    }

    /// Validate `perm` (new-to-old) as a bijection and build the inverse.
    pub fn from_new_to_old(perm: Vec<usize>, label: impl Into<String>) -> Result<Self, OrderingError> {
        let n = perm.len();
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n {
                return Err(OrderingError::OutOfRange { value: old as i64, n });
            }
            if inv[old] != usize::MAX {
                return Err(OrderingError::NotBijection { index: old });
            }
            inv[old] = new;
        }
        if let Some(missing) = inv.iter().position(|&v| v == usize::MAX) {
            return Err(OrderingError::NotBijection { index: missing });
        }
        Ok(Self { perm, inv, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn new_to_old(&self) -> &[usize] {
        &self.perm
    }

    pub fn old_to_new(&self) -> &[usize] {
        &self.inv
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn inverse(&self) -> Self {
        Self {
            perm: self.inv.clone(),
            inv: self.perm.clone(),
            label: format!("{}-inverse", self.label),
        }
    }
}

/// Reverse Cuthill–McKee ordering.
///
/// Per connected component: pick a pseudo-peripheral start by repeated BFS
/// level maximization (ties broken by lowest index), run Cuthill–McKee with
/// neighbors visited in increasing-degree order, then reverse the full
/// sequence. Deterministic for a given matrix.
pub fn rcm_order(a: &SparseMatrix) -> Permutation {
    let n = a.dim();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).filter(|&(j, _)| j != i).count())
        .collect();
    let neighbors = |v: usize| a.row(v).map(|(j, _)| j).filter(move |&j| j != v);

    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for root in 0..n {
        if visited[root] {
            continue;
        }
        // Lowest-index unvisited vertex seeds the component scan.
        let start = pseudo_peripheral(a, root, &degree);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        let mut component = vec![start];
        while let Some(v) = queue.pop_front() {
            let mut next: Vec<usize> = neighbors(v).filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                component.push(u);
                queue.push_back(u);
            }
        }
        order.extend(component);
    }
    order.reverse();
    Permutation::from_new_to_old(order, "rcm").expect("BFS visits each vertex once")
}

/// George–Liu style pseudo-peripheral vertex search from `root`'s component.
fn pseudo_peripheral(a: &SparseMatrix, root: usize, degree: &[usize]) -> usize {
    let n = a.dim();
    let mut start = root;
    let mut ecc = 0usize;
    loop {
        let mut level = vec![usize::MAX; n];
        level[start] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        let mut last_level = 0usize;
        let mut frontier: Vec<usize> = vec![start];
        while let Some(v) = queue.pop_front() {
            for (j, _) in a.row(v) {
                if j != v && level[j] == usize::MAX {
                    level[j] = level[v] + 1;
                    if level[j] > last_level {
                        last_level = level[j];
                        frontier.clear();
                    }
                    if level[j] == last_level {
                        frontier.push(j);
                    }
                    queue.push_back(j);
                }
            }
        }
        if last_level <= ecc {
            return start;
        }
        ecc = last_level;
        frontier.sort_by_key(|&u| (degree[u], u));
        start = frontier[0];
    }
}

/// Load a permutation from a text file, one integer per line. The index
/// base (0 or 1) is autodetected from the value range.
pub fn load_permutation(path: impl AsRef<Path>, n: usize) -> Result<Permutation, OrderingError> {
    let label = path
        .as_ref()
        .file_stem()
        .map(|s| format!("external:{}", s.to_string_lossy()))
        .unwrap_or_else(|| "external".into());
    let file = File::open(path.as_ref())?;
    let mut raw: Vec<i64> = Vec::with_capacity(n);
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: i64 = trimmed.parse().map_err(|_| OrderingError::Parse {
            line: idx + 1,
            msg: format!("not an integer: {trimmed}"),
        })?;
        raw.push(v);
    }
    if raw.len() != n {
        return Err(OrderingError::WrongLength { expected: n, got: raw.len() });
    }
    let min = *raw.iter().min().expect("nonempty");
    let max = *raw.iter().max().expect("nonempty");
    let one_based = min >= 1 && max == n as i64;
    let base = if one_based { 1 } else { 0 };
    let mut perm = Vec::with_capacity(n);
    for &v in &raw {
        let shifted = v - base;
        if shifted < 0 || shifted >= n as i64 {
            return Err(OrderingError::OutOfRange { value: v, n });
        }
        perm.push(shifted as usize);
    }
    Permutation::from_new_to_old(perm, label)
}

/// P A Pᵀ with sorted rows; the symmetric flag is preserved by value.
pub fn permute_symmetric(a: &SparseMatrix, p: &Permutation) -> Result<SparseMatrix, OrderingError> {
    let n = a.dim();
    if p.len() != n {
        return Err(OrderingError::WrongLength { expected: n, got: p.len() });
    }
    let inv = p.old_to_new();
    let trips: Vec<_> = (0..n)
        .flat_map(|i| a.row(i).map(move |(j, v)| (inv[i], inv[j], v)))
        .collect();
    Ok(SparseMatrix::from_triplets(n, trips)?)
}

/// Max |i - j| over stored entries.
pub fn bandwidth(a: &SparseMatrix) -> usize {
    (0..a.dim())
        .flat_map(|i| a.row(i).map(move |(j, _)| i.abs_diff(j)))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::gen;
    use proptest::prelude::*;
    use std::io::Write;

    fn path3_scrambled() -> SparseMatrix {
        // Path 1-2-3 presented in vertex order [2,1,3]: the middle vertex
        // comes first, so the natural bandwidth is 2.
        // vertex 0 <-> path node 2, vertex 1 <-> node 1, vertex 2 <-> node 3
        SparseMatrix::from_triplets(
            3,
            [
                (0, 0, 2.0),
                (1, 1, 2.0),
                (2, 2, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (0, 2, -1.0),
                (2, 0, -1.0),
            ],
        )
        .unwrap()
    }

    fn all_orderings_min_bandwidth(a: &SparseMatrix) -> usize {
        // brute-force oracle: try every permutation of {0,1,2}
        let perms = [
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ];
        perms
            .iter()
            .map(|p| {
                let p = Permutation::from_new_to_old(p.clone(), "x").unwrap();
                bandwidth(&permute_symmetric(a, &p).unwrap())
            })
            .min()
            .unwrap()
    }

    #[test]
    fn rcm_minimizes_path3_bandwidth() {
        let a = path3_scrambled();
        assert_eq!(bandwidth(&a), 2);
        let p = rcm_order(&a);
        let b = permute_symmetric(&a, &p).unwrap();
        assert_eq!(all_orderings_min_bandwidth(&a), 1);
        assert_eq!(bandwidth(&b), 1);
    }

    #[test]
    fn rcm_keeps_tridiagonal_banded() {
        let a = gen::tridiag(8).unwrap();
        let p = rcm_order(&a);
        let b = permute_symmetric(&a, &p).unwrap();
        assert_eq!(bandwidth(&b), 1);
    }

    #[test]
    fn rcm_improves_shuffled_poisson_grid() {
        let a = gen::poisson2d(4).unwrap();
        // deterministic shuffle of the 16 vertices
        let mut rng = crate::rng::Xoshiro256PlusPlus::new(77);
        let mut shuffle: Vec<usize> = (0..16).collect();
        for i in (1..16).rev() {
            let j = rng.next_below(i + 1);
            shuffle.swap(i, j);
        }
        let shuffled =
            permute_symmetric(&a, &Permutation::from_new_to_old(shuffle, "shuffle").unwrap())
                .unwrap();
        let p = rcm_order(&shuffled);
        let after = permute_symmetric(&shuffled, &p).unwrap();
        assert!(bandwidth(&after) <= bandwidth(&shuffled));
    }

    #[test]
    fn rcm_covers_disconnected_graphs() {
        // two disjoint paths plus an isolated vertex
        let a = SparseMatrix::from_triplets(
            5,
            [
                (0, 0, 2.0),
                (1, 1, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (2, 2, 2.0),
                (3, 3, 2.0),
                (4, 4, 2.0),
                (3, 4, -1.0),
                (4, 3, -1.0),
            ],
        )
        .unwrap();
        let p = rcm_order(&a);
        let mut seen = p.new_to_old().to_vec();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn load_permutation_cases() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, content: &str| {
            let path = dir.path().join(name);
            let mut f = std::fs::File::create(&path).unwrap();
            f.write_all(content.as_bytes()).unwrap();
            path
        };

        let ident = load_permutation(write("a.txt", "0\n1\n2\n"), 3).unwrap();
        assert_eq!(ident.new_to_old(), &[0, 1, 2]);

        // value out of range in either base
        assert!(matches!(
            load_permutation(write("b.txt", "4\n1\n2\n"), 3),
            Err(OrderingError::OutOfRange { .. }) | Err(OrderingError::NotBijection { .. })
        ));
        assert!(matches!(
            load_permutation(write("b2.txt", "3\n0\n2\n"), 3),
            Err(OrderingError::OutOfRange { .. }) | Err(OrderingError::NotBijection { .. })
        ));

        let one_based = load_permutation(write("c.txt", "1\n2\n3\n"), 3).unwrap();
        assert_eq!(one_based.new_to_old(), &[0, 1, 2]);

        // range {1..3} with n = 3 is a valid 1-based file in any order
        let shuffled = load_permutation(write("c2.txt", "3\n1\n2\n"), 3).unwrap();
        assert_eq!(shuffled.new_to_old(), &[2, 0, 1]);

        assert!(matches!(
            load_permutation(write("d.txt", "0\n1\n"), 3),
            Err(OrderingError::WrongLength { expected: 3, got: 2 })
        ));

        assert!(matches!(
            load_permutation(write("e.txt", "0\n0\n2\n"), 3),
            Err(OrderingError::NotBijection { .. })
        ));
    }

    #[test]
    fn permute_identity_is_noop() {
        let a = gen::random_sdd(10, 0.3, 5).unwrap();
        let b = permute_symmetric(&a, &Permutation::identity(10)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permute_swap_hand_case() {
        let a = SparseMatrix::from_triplets(2, [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)])
            .unwrap();
        let swap = Permutation::from_new_to_old(vec![1, 0], "swap").unwrap();
        let b = permute_symmetric(&a, &swap).unwrap();
        assert_eq!(b.get(0, 0), 3.0);
        assert_eq!(b.get(0, 1), 2.0);
        assert_eq!(b.get(1, 0), 2.0);
        assert_eq!(b.get(1, 1), 1.0);
    }

    #[test]
    fn permutation_preserves_eigenvalues() {
        let a = gen::random_sdd(20, 0.3, 9).unwrap();
        let p = rcm_order(&a);
        let b = permute_symmetric(&a, &p).unwrap();
        let ea = dense::sym_eigenvalues(&dense::to_dense(&a));
        let eb = dense::sym_eigenvalues(&dense::to_dense(&b));
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn permute_then_inverse_restores(seed in 0u64..100) {
            let a = gen::random_sdd(12, 0.4, seed).unwrap();
            let p = rcm_order(&a);
            let b = permute_symmetric(&a, &p).unwrap();
            let back = permute_symmetric(&b, &p.inverse()).unwrap();
            prop_assert_eq!(a, back);
        }
    }
}
