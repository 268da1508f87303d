//! Python bindings for the two-mode simulation library.

use std::collections::HashMap;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use twomode::dynamics::{evolve_effective, evolve_lab, evolve_rotating, IntegratorConfig};
use twomode::experiments::{self, SweepModel, SweepProtocol, ValidityScenario};
use twomode::phase_space::{self, FixedPointOptions};
use twomode::quantum;
use twomode::{AmplitudePair, Couplings, Error, PhasePoint};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        Error::Integration { .. } | Error::Protocol(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) | Error::Csv(_) => PyOSError::new_err(e.to_string()),
    }
}

/// Physical parameters `(gamma, delta0, c, A, omega)` of the driven model.
#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: twomode::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (gamma, delta0, c, A = 0.0, omega = 1.0))]
    #[allow(non_snake_case)]
    fn new(gamma: f64, delta0: f64, c: f64, A: f64, omega: f64) -> PyResult<Self> {
        let inner = twomode::ModelParams {
            gamma,
            delta0,
            c,
            amplitude: A,
            omega,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Builds parameters from the drive ratio `A/omega`.
    #[staticmethod]
    fn with_drive_ratio(gamma: f64, delta0: f64, c: f64, ratio: f64, omega: f64) -> PyResult<Self> {
        let inner = twomode::ModelParams::with_drive_ratio(gamma, delta0, c, ratio, omega);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn delta0(&self) -> f64 {
        self.inner.delta0
    }
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }
    #[getter(A)]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            inner: twomode::ModelParams {
                gamma,
                ..self.inner
            },
        }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParams(gamma={}, delta0={}, c={}, A={}, omega={})",
            p.gamma, p.delta0, p.c, p.amplitude, p.omega
        )
    }
}

#[pyclass(name = "FixedPoint", frozen, skip_from_py_object)]
struct PyFixedPoint {
    #[pyo3(get)]
    s: f64,
    #[pyo3(get)]
    phi: f64,
    #[pyo3(get)]
    energy: f64,
    #[pyo3(get)]
    stability: String,
}

#[pymethods]
impl PyFixedPoint {
    fn __repr__(&self) -> String {
        format!(
            "FixedPoint(s={:.6}, phi={:.6}, energy={:.6}, stability='{}')",
            self.s, self.phi, self.energy, self.stability
        )
    }
}

#[pyclass(name = "SweepResult", frozen, skip_from_py_object)]
struct PySweepResult {
    #[pyo3(get)]
    transition_probability: f64,
    #[pyo3(get)]
    attractor: String,
    #[pyo3(get)]
    attractor_gamma: Option<f64>,
    #[pyo3(get)]
    final_s: f64,
    #[pyo3(get)]
    final_phi: f64,
    #[pyo3(get)]
    pole_proximity: bool,
}

#[pyfunction]
fn bessel_j0(x: f64) -> PyResult<f64> {
    twomode::bessel_j0(x).map_err(to_py)
}

/// Averaged couplings `(gamma_eff, c_z, c_y)`.
#[pyfunction]
fn derive_effective(params: &PyModelParams) -> PyResult<(f64, f64, f64)> {
    let e = twomode::derive_effective(&params.inner).map_err(to_py)?;
    Ok((e.gamma_eff, e.c_z, e.c_y))
}

#[pyfunction]
fn hc_value(s: f64, phi: f64, gamma_eff: f64, delta0: f64, c_z: f64, c_y: f64) -> f64 {
    phase_space::hc_value(
        &PhasePoint::new(s, phi),
        &Couplings::new(gamma_eff, delta0, c_z, c_y),
    )
}

/// Fixed points of the averaged model, sorted by energy.
#[pyfunction]
fn find_fixed_points(params: &PyModelParams) -> PyResult<Vec<PyFixedPoint>> {
    let cp = Couplings::from_model(&params.inner).map_err(to_py)?;
    Ok(
        phase_space::find_fixed_points(&cp, &FixedPointOptions::default())
            .into_iter()
            .map(|f| PyFixedPoint {
                s: f.point.s,
                phi: f.point.phi,
                energy: f.energy,
                stability: f.stability.as_str().to_owned(),
            })
            .collect(),
    )
}

/// `(t, pop_a, pop_b, s, phi)`.
type Sample = (f64, f64, f64, f64, f64);

/// Trajectory samples from `(s0, phi0)`.
#[pyfunction]
#[pyo3(signature = (params, s0, phi0, t_final, frame = "rotating", dt = None, sample_every = 1))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    params: &PyModelParams,
    s0: f64,
    phi0: f64,
    t_final: f64,
    frame: &str,
    dt: Option<f64>,
    sample_every: usize,
) -> PyResult<Vec<Sample>> {
    let p = params.inner;
    let mut cfg = IntegratorConfig::recommended(&p, p.gamma, 200).with_sample_every(sample_every);
    if let Some(dt) = dt {
        cfg = cfg.with_dt(dt);
    }
    let start = AmplitudePair::from_phase_point(PhasePoint::new(s0, phi0), 0.0);
    let traj = py
        .detach(|| match frame {
            "lab" => evolve_lab(&start, &p, t_final, &cfg),
            "rotating" => evolve_rotating(&start, &p, t_final, &cfg),
            "effective" => twomode::derive_effective(&p)
                .and_then(|e| evolve_effective(&start, &e, p.delta0, t_final, &cfg)),
            other => Err(Error::Config(format!("unknown frame {other:?}"))),
        })
        .map_err(to_py)?;
    Ok(traj
        .samples
        .iter()
        .map(|x| {
            let pt = x.phase_point();
            (x.t, x.pop_a(), x.pop_b(), pt.s, pt.phi)
        })
        .collect())
}

/// Exact N-boson eigenvalues in ascending order.
#[pyfunction]
fn quantum_spectrum(
    py: Python<'_>,
    params: &PyModelParams,
    n_particles: usize,
) -> PyResult<Vec<f64>> {
    let p = params.inner;
    py.detach(|| quantum::quantum_spectrum(&p, n_particles))
        .map(|r| r.eigenvalues)
        .map_err(to_py)
}

fn protocol(
    gamma_start: f64,
    gamma_end: f64,
    rate: f64,
    model: &str,
    seed: u64,
) -> PyResult<SweepProtocol> {
    let model: SweepModel = model.parse().map_err(to_py)?;
    let mut proto = SweepProtocol::new(gamma_start, gamma_end, rate, model);
    proto.seed = seed;
    Ok(proto)
}

#[pyfunction]
#[pyo3(signature = (params, gamma_start = -5.0, gamma_end = 5.0, rate = 1e-4, model = "effective"))]
fn run_lz_sweep(
    py: Python<'_>,
    params: &PyModelParams,
    gamma_start: f64,
    gamma_end: f64,
    rate: f64,
    model: &str,
) -> PyResult<PySweepResult> {
    let p = params.inner;
    let proto = protocol(gamma_start, gamma_end, rate, model, 0)?;
    let r = py
        .detach(|| experiments::run_lz_sweep(&proto, &p, &proto.integrator(&p, 1000)))
        .map_err(to_py)?;
    let pt = r.final_state.phase_point();
    Ok(PySweepResult {
        transition_probability: r.transition_probability,
        attractor: r.attractor.label().to_owned(),
        attractor_gamma: r.attractor_gamma,
        final_s: pt.s,
        final_phi: pt.phi,
        pole_proximity: r.pole_proximity,
    })
}

/// Attractor histogram `{"D_R": n, "D_L": n, "none": n}`.
#[pyfunction]
#[pyo3(signature = (params, gamma_start = -5.0, gamma_end = 0.0, rate = 1e-3, ensemble_size = 50, perturbation = 1e-3, seed = 0, model = "effective"))]
#[allow(clippy::too_many_arguments)]
fn trapping_experiment(
    py: Python<'_>,
    params: &PyModelParams,
    gamma_start: f64,
    gamma_end: f64,
    rate: f64,
    ensemble_size: usize,
    perturbation: f64,
    seed: u64,
    model: &str,
) -> PyResult<HashMap<String, usize>> {
    let p = params.inner;
    let proto = protocol(gamma_start, gamma_end, rate, model, seed)?;
    let (h, _) = py
        .detach(|| {
            experiments::trapping_experiment(
                &proto,
                &p,
                &proto.integrator(&p, 1),
                ensemble_size,
                perturbation,
            )
        })
        .map_err(to_py)?;
    Ok(HashMap::from([
        ("D_R".to_owned(), h.right),
        ("D_L".to_owned(), h.left),
        ("none".to_owned(), h.none),
    ]))
}

/// Rows `(multiplier, omega, max_error)` of the averaging validity table.
#[pyfunction]
fn averaging_validity_report(
    py: Python<'_>,
    params: &PyModelParams,
    multipliers: Vec<f64>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let p = params.inner;
    let rows = py
        .detach(|| {
            experiments::averaging_validity_report(&p, &multipliers, &ValidityScenario::default())
        })
        .map_err(to_py)?;
    Ok(rows
        .iter()
        .map(|r| (r.multiplier, r.omega, r.max_error))
        .collect())
}

#[pymodule]
fn twomode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyFixedPoint>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(bessel_j0, m)?)?;
    m.add_function(wrap_pyfunction!(derive_effective, m)?)?;
    m.add_function(wrap_pyfunction!(hc_value, m)?)?;
    m.add_function(wrap_pyfunction!(find_fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(run_lz_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(trapping_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(averaging_validity_report, m)?)?;
    Ok(())
}
