//! Python bindings: circuit parameters, SLH triples, the mean-field,
//! steady-state and weak-drive solvers, and the acceptance checks.

use cfnet::fock::{FockOperator, ModeSpace};
use cfnet::quantum::{self, Cavity, TruncationPolicy};
use cfnet::semiclassical::{self, MeanFieldOptions, P1Form};
use cfnet::{c64, weak_drive, Error};
use faer::Mat;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidSpace(_) | Error::ModeOutOfRange { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::DimensionMismatch { .. } | Error::SpaceMismatch { .. } | Error::ChannelMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::NonUnitary(_) | Error::NonHermitian(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn p1_form(form: &str) -> PyResult<P1Form> {
    match form {
        "printed" => Ok(P1Form::Printed),
        "consistent" => Ok(P1Form::Consistent),
        _ => Err(PyValueError::new_err(format!("p1 form must be 'printed' or 'consistent', got {form:?}"))),
    }
}

fn cavity(name: &str) -> PyResult<Cavity> {
    match name {
        "a" => Ok(Cavity::A),
        "c" => Ok(Cavity::C),
        _ => Err(PyValueError::new_err(format!("cavity must be 'a' or 'c', got {name:?}"))),
    }
}

fn policy(dims: Option<(usize, usize)>) -> TruncationPolicy {
    match dims {
        Some((a, c)) => TruncationPolicy::fixed([a, c]),
        None => TruncationPolicy::default(),
    }
}

fn to_rows(m: faer::MatRef<'_, c64>) -> Vec<Vec<c64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: &[Vec<c64>]) -> PyResult<Mat<c64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(Mat::from_fn(n, m, |i, j| rows[i][j]))
}

/// Rates and detunings of the feedback circuit.
#[pyclass(name = "CircuitParams", from_py_object)]
#[derive(Clone)]
struct PyCircuitParams {
    inner: cfnet::CircuitParams,
}

#[pymethods]
impl PyCircuitParams {
    #[new]
    #[pyo3(signature = (gamma=2.0, gamma_f=2.5, kappa=1.0, chi=10.0, delta_s=50.0, delta=0.0, epsilon=0.1))]
    fn new(gamma: f64, gamma_f: f64, kappa: f64, chi: f64, delta_s: f64, delta: f64, epsilon: f64) -> PyResult<Self> {
        let inner = cfnet::CircuitParams { gamma, gamma_f, kappa, chi, delta_s, delta, epsilon, qubit: None };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Fig. 3 caption values (ε = 0).
    #[staticmethod]
    fn fig3() -> Self {
        Self { inner: cfnet::validation::fig3_params() }
    }

    /// Fig. 4 caption values.
    #[staticmethod]
    fn fig4() -> Self {
        Self { inner: cfnet::validation::fig4_params() }
    }

    /// Replaces χ by the value derived from `(g, Ω, Δ_qT)`.
    fn with_qubit(&self, g: f64, omega: f64, delta_qt: f64) -> PyResult<Self> {
        let (inner, _) = self
            .inner
            .clone()
            .with_qubit(cfnet::QubitParams { g, omega, delta_qt })
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    fn with_k(&self, k: f64) -> Self {
        Self { inner: self.inner.clone().with_k(k) }
    }

    fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { inner: self.inner.clone().with_epsilon(epsilon) }
    }

    fn with_delta_s(&self, delta_s: f64) -> Self {
        Self { inner: self.inner.clone().with_delta_s(delta_s) }
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn gamma_f(&self) -> f64 {
        self.inner.gamma_f
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn chi(&self) -> f64 {
        self.inner.chi
    }
    #[getter]
    fn delta_s(&self) -> f64 {
        self.inner.delta_s
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "CircuitParams(gamma={}, gamma_f={}, kappa={}, chi={}, delta_s={}, delta={}, epsilon={})",
            p.gamma, p.gamma_f, p.kappa, p.chi, p.delta_s, p.delta, p.epsilon
        )
    }
}

/// An `(S, L, H)` triple on a truncated Fock space.
#[pyclass(name = "SlhTriple", from_py_object)]
#[derive(Clone)]
struct PySlhTriple {
    inner: cfnet::SlhTriple,
}

#[pymethods]
impl PySlhTriple {
    /// `dims` are the per-mode Fock dimensions; `coupling` is one matrix per
    /// channel.
    #[new]
    fn new(dims: Vec<usize>, scattering: Vec<Vec<c64>>, coupling: Vec<Vec<Vec<c64>>>, hamiltonian: Vec<Vec<c64>>) -> PyResult<Self> {
        let space = ModeSpace::new(&dims).map_err(py_err)?;
        let op = |rows: &[Vec<c64>]| -> PyResult<FockOperator> {
            FockOperator::from_matrix(space.clone(), from_rows(rows)?).map_err(py_err)
        };
        let l = coupling.iter().map(|m| op(m)).collect::<PyResult<Vec<_>>>()?;
        let inner = cfnet::SlhTriple::new(from_rows(&scattering)?, l, op(&hamiltonian)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// The closed feedback loop of the circuit on `(dim_a, dim_c)`.
    #[staticmethod]
    fn circuit(params: &PyCircuitParams, dims: (usize, usize)) -> PyResult<Self> {
        let space = ModeSpace::two_mode(dims.0, dims.1).map_err(py_err)?;
        Ok(Self { inner: cfnet::build_circuit(&params.inner, &space).map_err(py_err)? })
    }

    /// `self ◁ other`: the output of `self` feeds `other`.
    fn series(&self, other: &PySlhTriple) -> PyResult<Self> {
        Ok(Self { inner: cfnet::series(&self.inner, &other.inner).map_err(py_err)? })
    }

    /// Output channel fed back into the input.
    fn feedback(&self) -> PyResult<Self> {
        Ok(Self { inner: cfnet::direct_feedback(&self.inner).map_err(py_err)? })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.space().dims().to_vec()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    fn scattering(&self) -> Vec<Vec<c64>> {
        to_rows(self.inner.scattering().as_ref())
    }

    fn coupling(&self) -> Vec<Vec<Vec<c64>>> {
        self.inner.coupling().iter().map(|l| to_rows(l.matrix())).collect()
    }

    fn hamiltonian(&self) -> Vec<Vec<c64>> {
        to_rows(self.inner.hamiltonian().matrix())
    }

    fn unitarity_error(&self) -> f64 {
        self.inner.unitarity_error()
    }

    /// Largest entrywise difference from another triple.
    fn max_abs_diff(&self, other: &PySlhTriple) -> PyResult<f64> {
        self.inner.max_abs_diff(&other.inner).map_err(py_err)
    }
}

/// `{p1, p2, a0_ratio}` of the reduced intensity cubic.
#[pyfunction]
#[pyo3(signature = (params, form="printed"))]
fn reduced_rates<'py>(py: Python<'py>, params: &PyCircuitParams, form: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = semiclassical::reduced_rates(&params.inner, p1_form(form)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p1", r.p1)?;
    d.set_item("p2", r.p2)?;
    d.set_item("a0_ratio", r.a0_ratio)?;
    Ok(d)
}

/// Mean-field steady states at the drive in `params`, one dict per root.
#[pyfunction]
#[pyo3(signature = (params, form="printed"))]
fn steady_roots<'py>(py: Python<'py>, params: &PyCircuitParams, form: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = MeanFieldOptions { p1_form: p1_form(form)?, drive_phase: 0.0 };
    let r = semiclassical::steady_roots_with(&params.inner, &opts).map_err(py_err)?;
    r.roots
        .iter()
        .map(|root| {
            let d = PyDict::new(py);
            d.set_item("C0_sq", root.x)?;
            d.set_item("A0_sq", root.a0_sq)?;
            d.set_item("A0", root.state.a)?;
            d.set_item("C0", root.state.c)?;
            d.set_item("stable", root.stable)?;
            d.set_item("max_growth_rate", root.max_growth_rate)?;
            Ok(d)
        })
        .collect()
}

type WindowSummary = (bool, f64, Option<(f64, f64)>);

/// `(regime, threshold_eps_sq, window)` over a drive grid; `window` is the
/// first and last ε with three roots, or `None`.
#[pyfunction]
#[pyo3(signature = (params, eps_grid, form="printed"))]
fn bistability_window(
    params: &PyCircuitParams,
    eps_grid: Vec<f64>,
    form: &str,
) -> PyResult<WindowSummary> {
    let opts = MeanFieldOptions { p1_form: p1_form(form)?, drive_phase: 0.0 };
    let s = semiclassical::drive_sweep_with(&params.inner, &eps_grid, &opts).map_err(py_err)?;
    let capable = s.rows.first().is_some_and(|r| r.regime.is_bistable_capable());
    Ok((capable, s.threshold_eps_sq, s.window))
}

/// Up- and down-sweep `|A₀|²` along `eps_grid`.
#[pyfunction]
fn hysteresis(params: &PyCircuitParams, eps_grid: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let h = semiclassical::hysteresis(&params.inner, &eps_grid).map_err(py_err)?;
    Ok((h.up.iter().map(|p| p.a0_sq).collect(), h.down.iter().map(|p| p.a0_sq).collect()))
}

/// Steady-state density matrix on `(dim_a, dim_c)` (mode-a-major basis).
#[pyfunction]
fn steady_state(params: &PyCircuitParams, dims: (usize, usize)) -> PyResult<Vec<Vec<c64>>> {
    let ss = quantum::circuit_steady_state(&params.inner, [dims.0, dims.1]).map_err(py_err)?;
    Ok(to_rows(ss.rho.matrix()))
}

/// g2 of one cavity with truncation escalation, or fixed `dims`.
#[pyfunction]
#[pyo3(signature = (params, cavity="a", dims=None))]
fn solve_g2<'py>(
    py: Python<'py>,
    params: &PyCircuitParams,
    cavity: &str,
    dims: Option<(usize, usize)>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = quantum::solve_g2(&params.inner, self::cavity(cavity)?, &policy(dims)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("g2", r.g2)?;
    d.set_item("mean_photon", r.mean_photon)?;
    d.set_item("truncation", (r.truncation[0], r.truncation[1]))?;
    d.set_item("converged", r.converged)?;
    d.set_item("residual", r.residual)?;
    d.set_item("min_eigenvalue", r.min_eigenvalue)?;
    Ok(d)
}

/// g2 along a K grid; failed points are `None`.
#[pyfunction]
#[pyo3(signature = (params, k_grid, cavity="a", dims=None))]
fn k_sweep(
    py: Python<'_>,
    params: &PyCircuitParams,
    k_grid: Vec<f64>,
    cavity: &str,
    dims: Option<(usize, usize)>,
) -> PyResult<Vec<Option<f64>>> {
    let cav = self::cavity(cavity)?;
    let policy = policy(dims);
    let p = params.inner.clone();
    let rows = py.detach(move || quantum::k_sweep(&p, &k_grid, cav, &policy)).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| r.result.ok().map(|g| g.g2)).collect())
}

/// Weak-drive amplitude table `C[n_a][n_c]`, `C[0][0] = 1`.
#[pyfunction]
#[pyo3(signature = (params, collective=false))]
fn amplitude_table(params: &PyCircuitParams, collective: bool) -> PyResult<Vec<Vec<c64>>> {
    let model = if collective { weak_drive::LossModel::CollectiveDissipator } else { weak_drive::LossModel::ComplexDetunings };
    let t = weak_drive::solve_amplitudes_with(&params.inner, model).map_err(py_err)?;
    Ok(t.c.iter().map(|r| r.to_vec()).collect())
}

/// Weak-drive `g2 = 2P₂/(P₁+2P₂)²` from the amplitude table.
#[pyfunction]
#[pyo3(signature = (params, collective=false))]
fn weak_drive_g2(params: &PyCircuitParams, collective: bool) -> PyResult<f64> {
    let model = if collective { weak_drive::LossModel::CollectiveDissipator } else { weak_drive::LossModel::ComplexDetunings };
    let o = weak_drive::occupations(&weak_drive::solve_amplitudes_with(&params.inner, model).map_err(py_err)?);
    weak_drive::g2_from_occupations(o.p1, o.p2).map_err(py_err)
}

/// Closed-form weak-drive g2 at `K`.
#[pyfunction]
fn g2_closed_form(params: &PyCircuitParams, k: f64) -> PyResult<f64> {
    weak_drive::g2_closed_form(&params.inner, k).map_err(py_err)
}

/// `(chi, rabi_ratio, dispersive_ratio, warning)`.
#[pyfunction]
fn kerr_from_qubit(g: f64, omega: f64, delta_qt: f64) -> PyResult<(f64, f64, f64, bool)> {
    let k = cfnet::circuit::kerr_from_qubit(g, omega, delta_qt).map_err(py_err)?;
    Ok((k.chi, k.rabi_ratio, k.dispersive_ratio, k.warning))
}

/// Runs the acceptance checks: `(id, name, passed, detail)` per criterion.
#[pyfunction]
fn validate(py: Python<'_>) -> Vec<(usize, String, bool, String)> {
    py.detach(cfnet::validation::run_all)
        .into_iter()
        .map(|c| (c.id, c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn pycfnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cfnet::VERSION)?;
    m.add_class::<PyCircuitParams>()?;
    m.add_class::<PySlhTriple>()?;
    m.add_function(wrap_pyfunction!(reduced_rates, m)?)?;
    m.add_function(wrap_pyfunction!(steady_roots, m)?)?;
    m.add_function(wrap_pyfunction!(bistability_window, m)?)?;
    m.add_function(wrap_pyfunction!(hysteresis, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(solve_g2, m)?)?;
    m.add_function(wrap_pyfunction!(k_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_table, m)?)?;
    m.add_function(wrap_pyfunction!(weak_drive_g2, m)?)?;
    m.add_function(wrap_pyfunction!(g2_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(kerr_from_qubit, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
