//! Python bindings for `advection-eigen`.

use advection_eigen::asymptotics;
use advection_eigen::construction::{run_construction, ConstructionConfig};
use advection_eigen::eigensolver::{self, eigenvalue_sweep, SweepOptions};
use advection_eigen::{Bc, Error, Family, Mesh, MeshConfig, OscillationSchedule, ProblemSpec};
use advection_eigen::coefficients::{ONE_THIRD, TWO_THIRDS};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::EmptyDomain(..)
        | Error::OutsideEnvelope(_)
        | Error::FamilyMismatch { .. }
        | Error::NotContact(_)
        | Error::TruncationTooShallow { .. }
        | Error::DegenerateGap(_)
        | Error::TooFewSamples { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn family(name: &str) -> PyResult<Family> {
    match name {
        "DD" | "dd" => Ok(Family::DD),
        "NN" | "nn" => Ok(Family::NN),
        _ => Err(PyValueError::new_err(format!("family must be 'DD' or 'NN', got {name:?}"))),
    }
}

fn bc(name: &str) -> PyResult<(Bc, Bc)> {
    let one = |c: char| match c {
        'N' | 'n' => Ok(Bc::Neumann),
        'D' | 'd' => Ok(Bc::Dirichlet),
        _ => Err(PyValueError::new_err(format!("boundary conditions are two of N/D, got {name:?}"))),
    };
    let cs: Vec<char> = name.chars().collect();
    if cs.len() != 2 {
        return Err(PyValueError::new_err(format!("boundary conditions are two of N/D, got {name:?}")));
    }
    Ok((one(cs[0])?, one(cs[1])?))
}

/// Reaction coefficient `c(r)`.
#[pyclass(frozen, skip_from_py_object, module = "advection_eigen_py")]
#[derive(Clone)]
struct Reaction(advection_eigen::Reaction);

#[pymethods]
impl Reaction {
    /// `c_in` on the middle interval, `c_out` outside, joined by ramps of width `ramp`.
    #[staticmethod]
    #[pyo3(signature = (c_in=1.0, c_out=100.0, ramp=0.0))]
    fn plateau(c_in: f64, c_out: f64, ramp: f64) -> PyResult<Self> {
        advection_eigen::Reaction::plateau(c_in, c_out, ramp).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant(c: f64) -> PyResult<Self> {
        advection_eigen::Reaction::constant(c).map(Self).map_err(err)
    }

    /// Coefficients in increasing powers of `r`.
    #[staticmethod]
    fn polynomial(coeffs: Vec<f64>) -> PyResult<Self> {
        advection_eigen::Reaction::polynomial(coeffs).map(Self).map_err(err)
    }

    fn __call__(&self, r: f64) -> f64 {
        self.0.value(r)
    }

    #[getter]
    fn c_min(&self) -> f64 {
        self.0.c_min()
    }

    #[getter]
    fn c_max(&self) -> f64 {
        self.0.c_max()
    }

    fn __repr__(&self) -> String {
        format!("Reaction({})", serde_json::to_string(&self.0).unwrap_or_default())
    }
}

/// Potential `m(r)`.
#[pyclass(frozen, skip_from_py_object, module = "advection_eigen_py")]
#[derive(Clone)]
struct Potential(advection_eigen::Potential);

#[pymethods]
impl Potential {
    #[staticmethod]
    fn zero() -> Self {
        Self(advection_eigen::Potential::zero())
    }

    #[staticmethod]
    fn bump(amplitude: f64) -> PyResult<Self> {
        advection_eigen::Potential::bump(amplitude).map(Self).map_err(err)
    }

    /// Oscillating ladder of the given family; `beta` is required for `"DD"` and rejected for `"NN"`.
    #[staticmethod]
    #[pyo3(signature = (family, delta, alpha, depth, beta=None))]
    fn ladder(family: &str, delta: f64, alpha: f64, depth: u32, beta: Option<f64>) -> PyResult<Self> {
        let f = self::family(family)?;
        let sch = OscillationSchedule::new(f, delta, alpha, beta, depth).map_err(err)?;
        match f {
            Family::DD => advection_eigen::Potential::build_sdd(&sch),
            Family::NN => advection_eigen::Potential::build_snn(&sch),
        }
        .map(Self)
        .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        advection_eigen::Potential::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __call__(&self, r: f64) -> f64 {
        self.0.value(r)
    }

    fn deriv(&self, r: f64) -> f64 {
        self.0.deriv(r)
    }

    /// Points where the potential touches zero between levels.
    fn contacts(&self) -> Vec<f64> {
        self.0.contacts()
    }

    /// Truncate the oscillation beyond the contact point `kappa`.
    fn fold_tail(&self, kappa: f64) -> PyResult<Self> {
        self.0.fold_tail(kappa).map(Self).map_err(err)
    }

    fn sup_distance(&self, other: &Potential) -> f64 {
        advection_eigen::coefficients::sup_distance(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", self.0.to_json())
    }
}

fn full_mesh(m: &advection_eigen::Potential, c: &advection_eigen::Reaction, s: f64, elements: Option<usize>) -> PyResult<Mesh> {
    match elements {
        Some(n) => Mesh::uniform((0.0, 1.0), n).map_err(err),
        None => Ok(Mesh::build(m, c, (0.0, 1.0), &MeshConfig::default()).map_err(err)?.resolve_weight(m, s, 0.5)),
    }
}

/// Principal eigenvalue of the full problem with Neumann conditions on `[0, 1]`.
///
/// Returns a dict with `lambda`, `residual`, `iterations`, `nodes` and `phi`.
#[pyfunction]
#[pyo3(signature = (s, potential, reaction, d=1, elements=None, tol=1e-12))]
fn solve<'py>(
    py: Python<'py>,
    s: f64,
    potential: &Potential,
    reaction: &Reaction,
    d: u32,
    elements: Option<usize>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = ProblemSpec::full(d, s, potential.0.clone(), reaction.0.clone()).map_err(err)?;
    let mesh = full_mesh(&potential.0, &reaction.0, s, elements)?;
    let r = eigensolver::solve(&spec, &mesh, tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("lambda", r.lambda)?;
    out.set_item("residual", r.residual)?;
    out.set_item("iterations", r.iterations)?;
    out.set_item("nodes", mesh.nodes.clone())?;
    out.set_item("phi", r.phi)?;
    Ok(out)
}

/// Principal eigenvalue over a grid of `s`; one dict per sample.
#[pyfunction]
#[pyo3(signature = (s_values, potential, reaction, d=1, tol=1e-12, workers=1))]
fn sweep<'py>(
    py: Python<'py>,
    s_values: Vec<f64>,
    potential: &Potential,
    reaction: &Reaction,
    d: u32,
    tol: f64,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let template = ProblemSpec::full(d, 0.0, potential.0.clone(), reaction.0.clone()).map_err(err)?;
    let base = Mesh::build(&potential.0, &reaction.0, (0.0, 1.0), &MeshConfig::default()).map_err(err)?;
    let opts = SweepOptions { tol, max_exponent_step: Some(0.5), workers: workers.max(1) };
    let rows = py.detach(|| eigenvalue_sweep(&template, &s_values, &base, &opts));
    to_py(py, &rows)
}

/// Principal eigenvalue on the middle interval `[1/3, 2/3]` under `bc` (`"NN"`, `"ND"`, `"DN"` or `"DD"`).
#[pyfunction]
#[pyo3(signature = (reaction, bc="NN", d=1, elements=2000, tol=1e-13))]
fn middle_eigenvalue(reaction: &Reaction, bc: &str, d: u32, elements: usize, tol: f64) -> PyResult<f64> {
    let spec = ProblemSpec::middle(d, reaction.0.clone(), self::bc(bc)?).map_err(err)?;
    let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), elements).map_err(err)?;
    Ok(eigensolver::solve(&spec, &mesh, tol).map_err(err)?.lambda)
}

/// The four middle-interval eigenvalues as a dict with `lambda_nn`, `lambda_nd`, `lambda_dn`, `lambda_dd`, `rho`.
#[pyfunction]
#[pyo3(signature = (reaction, d=1, elements=2000, tol=1e-13))]
fn reference_eigenvalues<'py>(
    py: Python<'py>,
    reaction: &Reaction,
    d: u32,
    elements: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mesh = Mesh::uniform((ONE_THIRD, TWO_THIRDS), elements).map_err(err)?;
    let rv = eigensolver::reference_eigenvalues(&reaction.0, d, &mesh, tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("lambda_nn", rv.lambda_nn)?;
    out.set_item("lambda_nd", rv.lambda_nd)?;
    out.set_item("lambda_dn", rv.lambda_dn)?;
    out.set_item("lambda_dd", rv.lambda_dd)?;
    out.set_item("rho", rv.rho())?;
    Ok(out)
}

/// Ladder coefficients `(sigma_n, l_n)` for `n = 1..=n_max`.
#[pyfunction]
#[pyo3(signature = (alpha, s, tail_tol=1e-16))]
fn ladder(alpha: f64, s: f64, tail_tol: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let lad = asymptotics::ladder(alpha, s, tail_tol).map_err(err)?;
    let n = lad.n_max();
    Ok(((1..=n).map(|k| lad.sigma(k)).collect(), (1..=n).map(|k| lad.ell(k)).collect()))
}

/// `(E, F, G)` of the ladder at `(alpha, s)`.
#[pyfunction]
#[pyo3(signature = (alpha, s, tail_tol=1e-16))]
fn efg(alpha: f64, s: f64, tail_tol: f64) -> PyResult<(f64, f64, f64)> {
    let v = asymptotics::efg(&asymptotics::ladder(alpha, s, tail_tol).map_err(err)?);
    Ok((v.e, v.f, v.g))
}

/// Galerkin against shooting; returns the crosscheck record as a dict.
#[pyfunction]
#[pyo3(signature = (s, potential, reaction, d=1, tol=1e-6))]
fn crosscheck<'py>(
    py: Python<'py>,
    s: f64,
    potential: &Potential,
    reaction: &Reaction,
    d: u32,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = ProblemSpec::full(d, s, potential.0.clone(), reaction.0.clone()).map_err(err)?;
    let cfg = MeshConfig { min_elems_per_interval: 16, max_element_size: 1.0 / 4000.0, ..MeshConfig::default() };
    let mesh = Mesh::build(&potential.0, &reaction.0, (0.0, 1.0), &cfg).map_err(err)?.resolve_weight(&potential.0, s, 0.5);
    let rec = py.detach(|| advection_eigen::oracle::crosscheck("py", &spec, &mesh, tol)).map_err(err)?;
    to_py(py, &rec)
}

/// Run the counterexample construction with its default configuration.
///
/// Returns `(trace, potential)`: the trace as a dict and the final potential
/// (`None` if the construction stopped early).
#[pyfunction]
fn construct(py: Python<'_>) -> PyResult<(Bound<'_, PyAny>, Option<Potential>)> {
    let out = py.detach(|| run_construction(&ConstructionConfig::default()));
    if let Some(e) = out.error {
        return Err(err(e));
    }
    Ok((to_py(py, &out.trace)?, out.potential.map(Potential)))
}

#[pymodule]
fn advection_eigen_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Reaction>()?;
    m.add_class::<Potential>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(middle_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(reference_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(ladder, m)?)?;
    m.add_function(wrap_pyfunction!(efg, m)?)?;
    m.add_function(wrap_pyfunction!(crosscheck, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    Ok(())
}
