//! Python bindings: sparse matrices, scaling, orderings, seeded problems,
//! instrumented PCG under the toolkit's preconditioners, and the profile
//! analytics.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use precondbench::ordering::Permutation;
use precondbench::precond::{
    build_ic, build_jacobi_control, build_laplacian_pipeline, build_sspai, build_ssor, build_tns,
    Preconditioner, SspaiConfig, SsorConfig, TnsConfig,
};
use precondbench::solver::{PcgConfig, SolveStatus};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SparseMatrix", from_py_object)]
#[derive(Clone)]
struct PySparseMatrix {
    inner: precondbench::SparseMatrix,
}

#[pymethods]
impl PySparseMatrix {
    /// Build from (i, j, value) triplets; duplicates are summed.
    #[staticmethod]
    fn from_triplets(n: usize, triplets: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(Self { inner: precondbench::SparseMatrix::from_triplets(n, triplets).map_err(value_err)? })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self { inner: precondbench::SparseMatrix::identity(n) }
    }

    /// k² x k² five-point stencil.
    #[staticmethod]
    fn poisson2d(k: usize) -> PyResult<Self> {
        Ok(Self { inner: precondbench::gen::poisson2d(k).map_err(value_err)? })
    }

    #[staticmethod]
    fn tridiag(n: usize) -> PyResult<Self> {
        Ok(Self { inner: precondbench::gen::tridiag(n).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, density=0.2, seed=123456789))]
    fn random_sdd(n: usize, density: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: precondbench::gen::random_sdd(n, density, seed).map_err(value_err)? })
    }

    /// Read a Matrix Market coordinate file.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let inner = precondbench::read_matrix_market(path)
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        precondbench::write_matrix_market(&self.inner, path)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.matvec(&x).map_err(value_err)
    }

    fn norms(&self) -> (f64, f64, f64) {
        let norms = self.inner.norms();
        (norms.fro, norms.one, norms.inf)
    }

    #[pyo3(signature = (max_iters=500, seed=1))]
    fn estimate_two_norm(&self, max_iters: usize, seed: u64) -> f64 {
        self.inner.estimate_two_norm(max_iters, seed)
    }

    /// Unit-diagonal symmetrized system; returns (matrix, scale) with
    /// scale the diagonal of D^{1/2}.
    fn scale_and_symmetrize(&self) -> PyResult<(PySparseMatrix, Vec<f64>)> {
        let sys = precondbench::scale_and_symmetrize(&self.inner).map_err(value_err)?;
        Ok((PySparseMatrix { inner: sys.matrix }, sys.scale))
    }

    /// Reverse Cuthill-McKee order as a new-to-old index list.
    fn rcm_order(&self) -> Vec<usize> {
        precondbench::rcm_order(&self.inner).new_to_old().to_vec()
    }

    /// Symmetric permutation P·A·Pᵀ from a new-to-old index list.
    fn permute(&self, perm: Vec<usize>) -> PyResult<PySparseMatrix> {
        let p = Permutation::from_new_to_old(perm, "external").map_err(value_err)?;
        Ok(PySparseMatrix {
            inner: precondbench::permute_symmetric(&self.inner, &p).map_err(value_err)?,
        })
    }

    fn bandwidth(&self) -> usize {
        precondbench::ordering::bandwidth(&self.inner)
    }

    /// Symbolic-Cholesky direct-method cost baseline (natural order).
    fn direct_cost(&self) -> u64 {
        precondbench::direct_cost_baseline(&self.inner, &Permutation::identity(self.inner.dim()))
    }

    fn __repr__(&self) -> String {
        format!("SparseMatrix(dim={}, nnz={})", self.inner.dim(), self.inner.nnz())
    }
}

/// Seeded right-hand side: returns (x_star, b, support_size).
#[pyfunction]
#[pyo3(signature = (matrix, seed=123456789))]
fn generate_problem(matrix: &PySparseMatrix, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>, usize)> {
    let p = precondbench::generate_problem(&matrix.inner, seed).map_err(value_err)?;
    Ok((p.x_star, p.b, p.support_size))
}

#[pyclass(name = "SolveResult")]
struct PySolveResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    work: Option<u64>,
    #[pyo3(get)]
    rel_residual: f64,
    #[pyo3(get)]
    apply_cost: u64,
    #[pyo3(get)]
    generation_cost: u64,
    #[pyo3(get)]
    solution: Vec<f64>,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={}, iterations={}, work={:?})",
            self.status, self.iterations, self.work
        )
    }
}

/// Parse a preconditioner label into an operator. Accepted forms:
/// "control", "ic0", "mic0", "ic:<droptol>", "mic:<droptol>",
/// "sgs:<sweeps>", "ssor:<omega>:<sweeps>", "tns:<terms>:<alpha>",
/// "sspai:<multiplier>", "laplacian:<droptol>".
fn build_operator(
    matrix: &precondbench::SparseMatrix,
    label: &str,
) -> PyResult<Box<dyn Preconditioner>> {
    let parts: Vec<&str> = label.split(':').collect();
    let parse_f64 = |s: &str| s.parse::<f64>().map_err(|_| value_err(format!("bad number {s}")));
    let parse_usize =
        |s: &str| s.parse::<usize>().map_err(|_| value_err(format!("bad count {s}")));
    match parts.as_slice() {
        ["control"] => Ok(Box::new(build_jacobi_control())),
        ["ic0"] => Ok(Box::new(build_ic(matrix, 0.0, false).map_err(value_err)?)),
        ["mic0"] => Ok(Box::new(build_ic(matrix, 0.0, true).map_err(value_err)?)),
        ["ic", tol] => Ok(Box::new(build_ic(matrix, parse_f64(tol)?, false).map_err(value_err)?)),
        ["mic", tol] => Ok(Box::new(build_ic(matrix, parse_f64(tol)?, true).map_err(value_err)?)),
        ["sgs", sweeps] => {
            let cfg = SsorConfig::new(1.0, parse_usize(sweeps)?).map_err(value_err)?;
            Ok(Box::new(build_ssor(matrix, cfg).map_err(value_err)?))
        }
        ["ssor", omega, sweeps] => {
            let cfg =
                SsorConfig::new(parse_f64(omega)?, parse_usize(sweeps)?).map_err(value_err)?;
            Ok(Box::new(build_ssor(matrix, cfg).map_err(value_err)?))
        }
        ["tns", terms, alpha] => {
            let alpha = parse_f64(alpha)?;
            let cfg = TnsConfig { terms: parse_usize(terms)?, alpha, alpha_label: "custom" };
            Ok(Box::new(build_tns(matrix, cfg).map_err(value_err)?))
        }
        ["sspai", multiplier] => {
            let cfg = SspaiConfig::from_multiplier(matrix, parse_f64(multiplier)?);
            Ok(Box::new(build_sspai(matrix, cfg).map_err(value_err)?))
        }
        ["laplacian", tol] => {
            Ok(Box::new(build_laplacian_pipeline(matrix, parse_f64(tol)?, true).map_err(value_err)?))
        }
        _ => Err(value_err(format!("unknown preconditioner label {label}"))),
    }
}

/// Instrumented PCG with x₀ = 0; work counted as
/// (5n + nnz + apply_cost)·iterations + apply_cost.
#[pyfunction]
#[pyo3(signature = (matrix, b, preconditioner="control", rel_res_tol=1e-10, max_iters=None))]
fn solve(
    matrix: &PySparseMatrix,
    b: Vec<f64>,
    preconditioner: &str,
    rel_res_tol: f64,
    max_iters: Option<usize>,
) -> PyResult<PySolveResult> {
    let op = build_operator(&matrix.inner, preconditioner)?;
    let n = matrix.inner.dim();
    let cfg = PcgConfig {
        rel_res_tol,
        max_iters: max_iters.unwrap_or(10 * n),
        record_every: 1,
        track_nrbe: false,
        two_norm_estimate: 1.0,
    };
    let trace = precondbench::pcg(&matrix.inner, &b, op.as_ref(), &cfg, None).map_err(value_err)?;
    let status = match trace.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIters => "max_iters",
        SolveStatus::Breakdown => "breakdown",
    };
    Ok(PySolveResult {
        status: status.to_string(),
        iterations: trace.iters,
        work: trace.work_to_tol,
        rel_residual: trace.records.last().map(|r| r.rel_residual).unwrap_or(f64::NAN),
        apply_cost: op.apply_cost(),
        generation_cost: op.generation_cost(),
        solution: trace.solution,
    })
}

/// Trapezoidal AUC of a profile curve in log2 space over [2^-2, 2^7].
#[pyfunction]
fn auc(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(value_err("xs and ys must have equal length >= 2"));
    }
    Ok(precondbench::auc(&xs, &ys))
}

/// Work formula (5n + nnz + apply_cost)·iters + apply_cost.
#[pyfunction]
fn total_work(n: usize, nnz: usize, apply_cost: u64, iters: u64) -> u64 {
    precondbench::total_work(n, nnz, apply_cost, iters)
}

#[pymodule]
fn precondbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySparseMatrix>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(generate_problem, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(total_work, m)?)?;
    Ok(())
}
