//! Python bindings: parameters, solver state, continuation, field samples
//! and the verification report.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use stokes_core::continuation::{continue_to_target, ContinuationSchedule};
use stokes_core::domain::{self, make_grid, AmplitudeTarget};
use stokes_core::error::WaveError;
use stokes_core::fields::{FieldKit, NodeSample};
use stokes_core::oracles;
use stokes_core::solver;
use stokes_core::verify::{crest_angle_degrees, run_all_on, verification_grid, ExcisionPolicy};

create_exception!(stokes_py, StokesError, PyException);
create_exception!(stokes_py, ContinuationError, StokesError);

fn err(e: WaveError) -> PyErr {
    StokesError::new_err(e.to_string())
}

fn target(kind: &str, value: f64) -> PyResult<AmplitudeTarget> {
    match kind {
        "height" | "H" => Ok(AmplitudeTarget::Height(value)),
        "crest_speed_ratio" | "s" => Ok(AmplitudeTarget::CrestSpeedRatio(value)),
        other => Err(PyValueError::new_err(format!(
            "target kind must be 'height' or 'crest_speed_ratio', got {other:?}"
        ))),
    }
}

fn kind_name(t: &AmplitudeTarget) -> &'static str {
    match t {
        AmplitudeTarget::Height(_) => "height",
        AmplitudeTarget::CrestSpeedRatio(_) => "crest_speed_ratio",
    }
}

#[pyclass(module = "stokes_py", name = "WaveParameters", from_py_object)]
#[derive(Clone)]
struct PyWaveParameters {
    inner: domain::WaveParameters,
}

#[pymethods]
impl PyWaveParameters {
    #[new]
    #[pyo3(signature = (d, kind = "height", value = 0.0, g = 1.0, p0 = 0.0))]
    fn new(d: f64, kind: &str, value: f64, g: f64, p0: f64) -> PyResult<Self> {
        let inner = domain::WaveParameters {
            g,
            d,
            p0,
            target: target(kind, value)?,
        };
        inner.validate().map_err(err)?;
        Ok(PyWaveParameters { inner })
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }

    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }

    /// `(kind, value)` of the amplitude target.
    #[getter]
    fn target(&self) -> (&'static str, f64) {
        (kind_name(&self.inner.target), self.inner.target.value())
    }

    fn linear_speed(&self) -> f64 {
        self.inner.linear_speed()
    }

    fn __repr__(&self) -> String {
        let (k, v) = self.target();
        format!(
            "WaveParameters(d={}, kind='{k}', value={v}, g={}, p0={})",
            self.inner.d, self.inner.g, self.inner.p0
        )
    }
}

#[pyclass(module = "stokes_py", name = "SolverState", from_py_object)]
#[derive(Clone)]
struct PySolverState {
    inner: domain::SolverState,
}

#[pymethods]
impl PySolverState {
    #[new]
    #[pyo3(signature = (b, c, m, q_head))]
    fn new(b: Vec<f64>, c: f64, m: f64, q_head: f64) -> PyResult<Self> {
        let inner = domain::SolverState { b, c, m, q_head };
        inner.validate().map_err(err)?;
        Ok(PySolverState { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = domain::SolverState::from_json(text)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PySolverState { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b.clone()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    #[getter]
    fn q_head(&self) -> f64 {
        self.inner.q_head
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    fn crest_speed_ratio(&self) -> PyResult<f64> {
        solver::crest_speed_ratio(&self.inner).map_err(err)
    }

    fn wave_height(&self) -> PyResult<f64> {
        solver::wave_height(&self.inner).map_err(err)
    }

    fn mean_depth(&self) -> PyResult<f64> {
        solver::mean_depth(&self.inner).map_err(err)
    }

    fn tail_energy_fraction(&self) -> PyResult<f64> {
        solver::tail_energy_fraction(&self.inner).map_err(err)
    }

    /// Interior angle at the crest in degrees.
    fn crest_angle(&self) -> PyResult<f64> {
        crest_angle_degrees(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverState(N={}, c={}, m={}, Q={})",
            self.inner.modes(),
            self.inner.c,
            self.inner.m,
            self.inner.q_head
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
fn flat_water_state(params: &PyWaveParameters, modes: usize) -> PySolverState {
    PySolverState {
        inner: domain::flat_water_state(&params.inner, modes),
    }
}

#[pyfunction]
fn airy_state(a: f64, params: &PyWaveParameters, modes: usize) -> PySolverState {
    PySolverState {
        inner: oracles::airy_state(a, &params.inner, modes),
    }
}

/// Continues from flat water through `targets`, a list of `(kind, value)`
/// pairs, and returns one state per target. An empty list gives the flat
/// state alone.
#[pyfunction]
#[pyo3(signature = (params, targets, modes = 64, max_modes = 512, unresolved_tail = None))]
fn continuation(
    py: Python<'_>,
    params: &PyWaveParameters,
    targets: Vec<(String, f64)>,
    modes: usize,
    max_modes: usize,
    unresolved_tail: Option<f64>,
) -> PyResult<Vec<PySolverState>> {
    let targets = targets
        .iter()
        .map(|(k, v)| target(k, *v))
        .collect::<PyResult<Vec<_>>>()?;
    let mut sched = ContinuationSchedule::new(targets);
    sched.initial_modes = modes;
    sched.refinement.max_modes = max_modes.max(modes);
    if let Some(t) = unresolved_tail {
        sched.refinement.unresolved_tail = t;
    }
    let params = params.inner;
    let family = py
        .detach(|| continue_to_target(&params, &sched))
        .map_err(|f| ContinuationError::new_err(f.to_string()))?;
    Ok(family
        .into_iter()
        .map(|m| PySolverState { inner: m.state })
        .collect())
}

/// Continues straight to the parameters' own target.
#[pyfunction]
#[pyo3(signature = (params, modes = 64, max_modes = 512))]
fn solve(
    py: Python<'_>,
    params: &PyWaveParameters,
    modes: usize,
    max_modes: usize,
) -> PyResult<PySolverState> {
    let t = params.inner.target;
    let targets = if t.is_flat() {
        Vec::new()
    } else {
        vec![(kind_name(&t).to_string(), t.value())]
    };
    let mut family = continuation(py, params, targets, modes, max_modes, None)?;
    Ok(family.pop().expect("family is never empty"))
}

type Column = (&'static str, fn(&NodeSample) -> f64);

const COLUMNS: [Column; 16] = [
    ("q", |n| n.q),
    ("p", |n| n.p),
    ("x", |n| n.x),
    ("y", |n| n.y),
    ("u", |n| n.u),
    ("v", |n| n.v),
    ("P", |n| n.pressure),
    ("psi", |n| n.psi),
    ("phi", |n| n.phi),
    ("f", |n| n.f),
    ("u_x", |n| n.u_x),
    ("u_y", |n| n.u_y),
    ("v_x", |n| n.v_x),
    ("v_y", |n| n.v_y),
    ("P_x", |n| n.p_x),
    ("P_y", |n| n.p_y),
];

fn sample_dict<'py>(py: Python<'py>, n: &NodeSample) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, get) in COLUMNS {
        d.set_item(name, get(n))?;
    }
    Ok(d)
}

/// Field values at conformal angle `theta = q/c` and stream level `p`.
#[pyfunction]
fn sample<'py>(
    py: Python<'py>,
    state: &PySolverState,
    params: &PyWaveParameters,
    theta: f64,
    p: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let kit = FieldKit::new(&state.inner, &params.inner).map_err(err)?;
    sample_dict(py, &kit.sample(theta, p).map_err(err)?)
}

/// Column-wise field samples on an `(N+1) × (M+1)` grid, row-major over
/// `(p, q)` with the surface first.
#[pyfunction]
fn field_grid<'py>(
    py: Python<'py>,
    state: &PySolverState,
    params: &PyWaveParameters,
    n: usize,
    m: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = make_grid(n, m, &state.inner).map_err(err)?;
    let fg = FieldKit::new(&state.inner, &params.inner)
        .and_then(|k| k.sample_grid(&grid))
        .map_err(err)?;
    let out = PyDict::new(py);
    for (name, get) in COLUMNS {
        let vals: Vec<f64> = fg.nodes.iter().map(get).collect();
        out.set_item(name, PyList::new(py, vals)?)?;
    }
    Ok(out)
}

/// Runs every check and returns the report as a dict. `epsilon` and
/// `margin` override the default excision radius and strict slack.
#[pyfunction]
#[pyo3(signature = (state, params, epsilon = None, margin = None))]
fn verify<'py>(
    py: Python<'py>,
    state: &PySolverState,
    params: &PyWaveParameters,
    epsilon: Option<f64>,
    margin: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let st = state.inner.clone();
    let params = params.inner;
    let report = py.detach(|| -> stokes_core::error::Result<_> {
        let grid = verification_grid(&st)?;
        let mut policy = ExcisionPolicy::for_grid(&grid, params.g);
        if let Some(e) = epsilon {
            policy.epsilon = e;
        }
        if let Some(m) = margin {
            policy.strict_margin = m;
        }
        Ok(run_all_on(&st, &params, Some(policy), &grid))
    });
    let text = report.map_err(err)?.to_json();
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule]
fn stokes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWaveParameters>()?;
    m.add_class::<PySolverState>()?;
    m.add("StokesError", m.py().get_type::<StokesError>())?;
    m.add("ContinuationError", m.py().get_type::<ContinuationError>())?;
    m.add_function(wrap_pyfunction!(flat_water_state, m)?)?;
    m.add_function(wrap_pyfunction!(airy_state, m)?)?;
    m.add_function(wrap_pyfunction!(continuation, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(field_grid, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
