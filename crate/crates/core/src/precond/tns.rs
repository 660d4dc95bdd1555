//! Truncated Neumann series preconditioner:
//! M⁻¹ = α·Σ_{k=0}^{m} (I − αA)^k, evaluated by a Horner recurrence with
//! one matvec per term.

use thiserror::Error;

use super::Preconditioner;
use crate::sparse::SparseMatrix;

#[derive(Debug, Error)]
pub enum TnsError {
    #[error("truncated Neumann series needs at least one term")]
    NoTerms,
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
}

/// Which norm the scaling factor was derived from; label bookkeeping for
/// reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaChoice {
    /// 1 / ‖A‖_F
    Frobenius,
    /// 1 / ‖A‖_∞
    InfinityNorm,
    /// 1 / ‖A‖₁
    OneNorm,
    /// 2 / ‖A‖₂
    TwoNorm,
    /// α = 1
    Unit,
}

impl AlphaChoice {
    pub fn label(self) -> &'static str {
        match self {
            AlphaChoice::Frobenius => "fro",
            AlphaChoice::InfinityNorm => "inf",
            AlphaChoice::OneNorm => "one",
            AlphaChoice::TwoNorm => "two",
            AlphaChoice::Unit => "unit",
        }
    }

    /// Resolve the numeric α. `two_norm_estimate` backs the 2-norm choice.
    pub fn alpha(self, a: &SparseMatrix, two_norm_estimate: f64) -> f64 {
        let norms = a.norms();
        match self {
            AlphaChoice::Frobenius => 1.0 / norms.fro,
            AlphaChoice::InfinityNorm => 1.0 / norms.inf,
            AlphaChoice::OneNorm => 1.0 / norms.one,
            AlphaChoice::TwoNorm => 2.0 / two_norm_estimate,
            AlphaChoice::Unit => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TnsConfig {
    /// Number of series terms m >= 1.
    pub terms: usize,
    pub alpha: f64,
    pub alpha_label: &'static str,
}

pub struct TnsOperator {
    a: SparseMatrix,
    terms: usize,
    alpha: f64,
    apply_cost: u64,
    label: String,
}

pub fn build_tns(a: &SparseMatrix, cfg: TnsConfig) -> Result<TnsOperator, TnsError> {
    if cfg.terms == 0 {
        return Err(TnsError::NoTerms);
    }
    if !(cfg.alpha > 0.0) {
        return Err(TnsError::BadAlpha(cfg.alpha));
    }
    Ok(TnsOperator {
        a: a.clone(),
        terms: cfg.terms,
        alpha: cfg.alpha,
        apply_cost: (cfg.terms * a.nnz()) as u64,
        label: format!("tns:m={},alpha={}", cfg.terms, cfg.alpha_label),
    })
}

impl Preconditioner for TnsOperator {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        // Horner: z <- r + (I - αA) z, m times, then scale by α.
        let mut z = r.to_vec();
        for _ in 0..self.terms {
            let az = self.a.matvec(&z).expect("dimension fixed at build");
            for i in 0..z.len() {
                z[i] = r[i] + z[i] - self.alpha * az[i];
            }
        }
        for v in z.iter_mut() {
            *v *= self.alpha;
        }
        z
    }

    fn apply_cost(&self) -> u64 {
        self.apply_cost
    }

    fn config_label(&self) -> &str {
        &self.label
    }
}
