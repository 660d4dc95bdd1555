//! Matrix fetching and caching.
//!
//! Downloads Matrix Market payloads (plain, gzip, or tar.gz archives),
//! stores them under the cache directory, and records a sha256 checksum
//! next to each file. Offline mode never touches the network.

use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "PRECOND_BENCH_CACHE";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("download of {url} failed: {msg}")]
    Download { url: String, msg: String },
    #[error("checksum mismatch for {id}: expected {expected}, got {got}")]
    ChecksumMismatch { id: String, expected: String, got: String },
    #[error("offline mode and {id} is not cached")]
    OfflineMiss { id: String },
    #[error("archive for {id} contains no .mtx member")]
    NoMatrixMember { id: String },
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache path for a matrix id.
pub fn cached_path(cache_dir: &Path, id: &str) -> PathBuf {
    cache_dir.join(format!("{id}.mtx"))
}

/// Fetch a matrix into the cache, returning the cached path and checksum.
///
/// A cached file is used as-is after checksum verification; nothing is
/// downloaded for it. `expected_checksum` (when known) is verified against
/// both cached and freshly downloaded payloads.
pub fn fetch_matrix(
    id: &str,
    url: &str,
    cache_dir: &Path,
    offline: bool,
    expected_checksum: Option<&str>,
) -> Result<(PathBuf, String), FetchError> {
    std::fs::create_dir_all(cache_dir)?;
    let path = cached_path(cache_dir, id);
    let sum_path = cache_dir.join(format!("{id}.sha256"));

    if path.exists() {
        let bytes = std::fs::read(&path)?;
        let got = sha256_hex(&bytes);
        let expected = if let Some(exp) = expected_checksum {
            exp.to_string()
        } else if sum_path.exists() {
            std::fs::read_to_string(&sum_path)?.trim().to_string()
        } else {
            got.clone()
        };
        if got != expected {
            return Err(FetchError::ChecksumMismatch { id: id.into(), expected, got });
        }
        return Ok((path, got));
    }

    if offline {
        return Err(FetchError::OfflineMiss { id: id.into() });
    }

    let payload = download(url)?;
    let mtx = extract_matrix_market(id, url, payload)?;
    let got = sha256_hex(&mtx);
    if let Some(exp) = expected_checksum {
        if got != exp {
            return Err(FetchError::ChecksumMismatch {
                id: id.into(),
                expected: exp.to_string(),
                got,
            });
        }
    }
    std::fs::write(&path, &mtx)?;
    std::fs::write(&sum_path, format!("{got}\n"))?;
    Ok((path, got))
}

fn download(url: &str) -> Result<Vec<u8>, FetchError> {
    let mut response = ureq::get(url)
        .call()
        .map_err(|e| FetchError::Download { url: url.into(), msg: e.to_string() })?;
    response
        .body_mut()
        .with_config()
        .limit(1 << 31)
        .read_to_vec()
        .map_err(|e| FetchError::Download { url: url.into(), msg: e.to_string() })
}

/// Unwrap .tar.gz / .gz payloads down to the first .mtx member.
fn extract_matrix_market(id: &str, url: &str, payload: Vec<u8>) -> Result<Vec<u8>, FetchError> {
    let lower = url.to_lowercase();
    if lower.ends_with(".tar.gz") || lower.ends_with(".tgz") {
        let gz = flate2::read::GzDecoder::new(payload.as_slice());
        let mut archive = tar::Archive::new(gz);
        for entry in archive.entries()? {
            let mut entry = entry?;
            let is_mtx = entry
                .path()?
                .extension()
                .map(|e| e.eq_ignore_ascii_case("mtx"))
                .unwrap_or(false);
            if is_mtx {
                let mut bytes = Vec::new();
                entry.read_to_end(&mut bytes)?;
                return Ok(bytes);
            }
        }
        Err(FetchError::NoMatrixMember { id: id.into() })
    } else if lower.ends_with(".gz") {
        let mut gz = flate2::read::GzDecoder::new(payload.as_slice());
        let mut bytes = Vec::new();
        gz.read_to_end(&mut bytes)?;
        Ok(bytes)
    } else {
        Ok(payload)
    }
}
