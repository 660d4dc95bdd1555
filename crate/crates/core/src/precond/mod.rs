//! Preconditioners as interchangeable apply-inverse operators.
//!
//! Every operator reports its per-application cost and its generation cost
//! in the same operation units as the solver work model. Apply must act as
//! a symmetric linear operator; CG is not valid otherwise.

pub mod ic;
pub mod laplacian;
pub mod lu_adapter;
pub mod sspai;
pub mod ssor;
pub mod tns;

pub use ic::{build_ic, GenerationFailure, IcFactor};
pub use laplacian::{build_laplacian_pipeline, LaplacianPipeline};
pub use lu_adapter::{symmetrize_lu, AdapterError};
pub use sspai::{build_sspai, SspaiConfig, SspaiOperator};
pub use ssor::{build_ssor, optimal_omega, OmegaError, SsorConfig, SsorMode, SsorOperator};
pub use tns::{build_tns, AlphaChoice, TnsConfig, TnsOperator};

/// Apply-inverse interface: z = M⁻¹ r.
pub trait Preconditioner: Send + Sync {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
    /// Operations per application.
    fn apply_cost(&self) -> u64;
    /// Operations to build; zero for classical methods.
    fn generation_cost(&self) -> u64 {
        0
    }
    fn config_label(&self) -> &str;
}

/// The control operator: after unit-diagonal scaling the Jacobi
/// preconditioner is the identity, at zero cost.
pub struct Control;

pub fn build_jacobi_control() -> Control {
    Control
}

impl Preconditioner for Control {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }

    fn apply_cost(&self) -> u64 {
        0
    }

    fn config_label(&self) -> &str {
        "control"
    }
}

/// Worst violation of operator symmetry and linearity over `pairs` random
/// vector pairs, relative to the vector scales involved. Used by the
/// operator test suites.
pub fn operator_invariant_violation(
    m: &dyn Preconditioner,
    n: usize,
    pairs: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = crate::rng::Xoshiro256PlusPlus::new(seed);
    let mut sym_worst = 0.0f64;
    let mut lin_worst = 0.0f64;
    for _ in 0..pairs {
        let r: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let mr = m.apply(&r);
        let ms = m.apply(&s);
        let lhs = crate::sparse::dot(&mr, &s);
        let rhs = crate::sparse::dot(&r, &ms);
        let scale = lhs.abs().max(rhs.abs()).max(1e-30);
        sym_worst = sym_worst.max((lhs - rhs).abs() / scale);

        let alpha = rng.next_f64() * 4.0 - 2.0;
        let beta = rng.next_f64() * 4.0 - 2.0;
        let mix: Vec<f64> = r.iter().zip(&s).map(|(a, b)| alpha * a + beta * b).collect();
        let m_mix = m.apply(&mix);
        let norm = crate::sparse::norm2(&m_mix).max(1e-30);
        for i in 0..n {
            let expected = alpha * mr[i] + beta * ms[i];
            lin_worst = lin_worst.max((m_mix[i] - expected).abs() / norm);
        }
    }
    (sym_worst, lin_worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_is_identity_with_zero_cost() {
        let c = build_jacobi_control();
        assert_eq!(c.apply(&[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(c.apply_cost(), 0);
        assert_eq!(c.generation_cost(), 0);
        assert_eq!(c.config_label(), "control");
    }

    #[test]
    fn control_passes_operator_invariants() {
        let (sym, lin) = operator_invariant_violation(&Control, 32, 20, 3);
        assert!(sym <= 1e-12);
        assert!(lin <= 1e-12);
    }
}
