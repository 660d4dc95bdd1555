//! Matrix Market coordinate-format I/O.
//!
//! Reads real symmetric or general coordinate files into full (both
//! triangle) storage; 1-based indices are converted at this boundary and
//! duplicate entries are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::sparse::SparseMatrix;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> MarketError {
    MarketError::Parse { line, msg: msg.into() }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix, MarketError> {
    let file = File::open(path)?;
    read_matrix_market_from(BufReader::new(file))
}

pub fn read_matrix_market_from(reader: impl Read) -> Result<SparseMatrix, MarketError> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))
        .and_then(|(i, l)| Ok((i + 1, l?)))?;
    let fields: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(lineno, format!("malformed header: {header}")));
    }
    if fields[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported storage format: {}", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(lineno, format!("unsupported field type: {}", fields[3])));
    }
    let symmetric_header = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(lineno, format!("unsupported symmetry: {other}"))),
    };

    // Skip comments up to the size line.
    let mut n = 0usize;
    let mut size_seen = false;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if !size_seen {
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(lineno, "size line must have three fields"));
            }
            n = parts[0].parse().map_err(|_| parse_err(lineno, "bad row count"))?;
            let cols: usize =
                parts[1].parse().map_err(|_| parse_err(lineno, "bad column count"))?;
            let nnz_declared: usize =
                parts[2].parse().map_err(|_| parse_err(lineno, "bad nnz count"))?;
            if n != cols {
                return Err(parse_err(lineno, format!("matrix must be square, got {n}x{cols}")));
            }
            size_seen = true;
            triplets.reserve(nnz_declared);
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(lineno, "entry line must be `i j value`"));
        }
        let i: usize = parts[0].parse().map_err(|_| parse_err(lineno, "bad row index"))?;
        let j: usize = parts[1].parse().map_err(|_| parse_err(lineno, "bad column index"))?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("non-real value: {}", parts[2])))?;
        if i < 1 || i > n || j < 1 || j > n {
            return Err(parse_err(lineno, format!("index ({i},{j}) out of range for n={n}")));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric_header && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if !size_seen {
        return Err(parse_err(0, "missing size line"));
    }
    SparseMatrix::from_triplets(n, triplets)
        .map_err(|e| parse_err(0, format!("invalid matrix data: {e}")))
}

/// Write in coordinate format; symmetric matrices store the lower triangle.
/// Values are printed with 17 significant digits so a round trip is exact.
pub fn write_matrix_market(
    a: &SparseMatrix,
    path: impl AsRef<Path>,
) -> Result<(), MarketError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let n = a.dim();
    let symmetric = a.is_symmetric();
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let mut count = 0usize;
    for i in 0..n {
        for (j, _) in a.row(i) {
            if !symmetric || j <= i {
                count += 1;
            }
        }
    }
    writeln!(w, "{n} {n} {count}")?;
    for i in 0..n {
        for (j, v) in a.row(i) {
            if !symmetric || j <= i {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read_str(s: &str) -> Result<SparseMatrix, MarketError> {
        read_matrix_market_from(s.as_bytes())
    }

    #[test]
    fn reads_symmetric_file() {
        let a = read_str(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             % a comment\n\
             2 2 3\n1 1 2.0\n2 1 -1.0\n2 2 2.0\n",
        )
        .unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert!(a.is_symmetric());
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = read_str(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 4\n1 2 0.5\n1 2 0.5\n1 1 1.0\n2 2 1.0\n",
        )
        .unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn malformed_header_rejected() {
        assert!(read_str("%%NotMarket matrix coordinate real general\n1 1 0\n").is_err());
        assert!(read_str("%%MatrixMarket matrix array real general\n1 1\n").is_err());
        assert!(read_str("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").is_err());
    }

    #[test]
    fn out_of_range_index_rejected() {
        let r = read_str("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        assert!(matches!(r, Err(MarketError::Parse { .. })));
    }

    #[test]
    fn non_real_value_rejected() {
        let r = read_str("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 abc\n");
        assert!(matches!(r, Err(MarketError::Parse { .. })));
    }

    #[test]
    fn zero_entries_dropped() {
        let a = read_str("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.0\n2 2 3.0\n")
            .unwrap();
        assert_eq!(a.nnz(), 1);
    }

    proptest! {
        #[test]
        fn roundtrip_is_value_identical(seed in 0u64..200) {
            let a = crate::gen::random_sdd(15, 0.3, seed).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.mtx");
            write_matrix_market(&a, &path).unwrap();
            let back = read_matrix_market(&path).unwrap();
            prop_assert_eq!(a.dim(), back.dim());
            prop_assert_eq!(a.nnz(), back.nnz());
            prop_assert_eq!(&a, &back);
        }
    }
}
