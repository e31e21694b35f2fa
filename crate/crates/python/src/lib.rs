//! Python bindings: emitter configuration, dipole coefficients, the dressed
//! triplet, spectra, sensor correlations and the nonclassicality quantifiers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use photocorr::config::RunConfig;
use photocorr::dipole::{self, Coupling, EmitterPairConfig, MAGIC_COS_THETA};
use photocorr::nonclassicality;
use photocorr::observables::{self, Filter};
use photocorr::{presets, sweep, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::Config { .. } | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(format!("{} ({})", other, other.reason_code())),
    }
}

fn filter(linewidth: f64, epsilon: f64) -> Filter {
    Filter::new(linewidth).with_epsilon(epsilon)
}

/// Two (or one) resonantly driven two-level emitters.
#[pyclass(name = "EmitterPair", module = "pyphotocorr", skip_from_py_object)]
#[derive(Clone)]
struct PyEmitterPair {
    inner: EmitterPairConfig,
}

#[pymethods]
impl PyEmitterPair {
    #[new]
    #[pyo3(signature = (kr12 = 0.05, cos_theta12 = MAGIC_COS_THETA, rabi = 30.0, atoms = 2, independent = false))]
    fn new(kr12: f64, cos_theta12: f64, rabi: f64, atoms: usize, independent: bool) -> PyResult<Self> {
        let mut inner = EmitterPairConfig::pair(kr12, cos_theta12, rabi);
        inner.atoms = atoms;
        if independent {
            inner.coupling = Coupling::Independent;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kr12(&self) -> f64 {
        self.inner.kr12
    }

    #[getter]
    fn cos_theta12(&self) -> f64 {
        self.inner.cos_theta12
    }

    #[getter]
    fn rabi(&self) -> f64 {
        self.inner.rabi
    }

    #[getter]
    fn atoms(&self) -> usize {
        self.inner.atoms
    }

    #[getter]
    fn independent(&self) -> bool {
        self.inner.coupling == Coupling::Independent
    }

    /// `(δ₁₂, γ₁₂)` as used by the dynamics (zero when independent).
    fn coefficients(&self) -> PyResult<(f64, f64)> {
        let c = self.inner.effective_coefficients().map_err(to_py)?;
        Ok((c.delta12, c.gamma12))
    }

    /// `(Δ₁₂, Δ₂₃, Δ₁₃)`.
    fn triplet(&self) -> PyResult<(f64, f64, f64)> {
        let c = self.inner.effective_coefficients().map_err(to_py)?;
        let t = dipole::dressed_triplet(&self.inner, &c);
        Ok((t.delta_12, t.delta_23, t.delta_13))
    }

    /// The seven one-photon line positions, ascending.
    fn sidebands(&self) -> PyResult<Vec<f64>> {
        let c = self.inner.effective_coefficients().map_err(to_py)?;
        Ok(dipole::sideband_frequencies(&dipole::dressed_triplet(&self.inner, &c)).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "EmitterPair(kr12={}, cos_theta12={}, rabi={}, atoms={}, independent={})",
            self.inner.kr12,
            self.inner.cos_theta12,
            self.inner.rabi,
            self.inner.atoms,
            if self.independent() { "True" } else { "False" }
        )
    }
}

/// Bare dipole coefficients `(δ₁₂, γ₁₂)` for a separation and angle.
#[pyfunction]
#[pyo3(signature = (kr12, cos_theta12 = MAGIC_COS_THETA))]
fn dipole_coefficients(kr12: f64, cos_theta12: f64) -> PyResult<(f64, f64)> {
    let c = dipole::dipole_coefficients(&EmitterPairConfig::pair(kr12, cos_theta12, 0.0)).map_err(to_py)?;
    Ok((c.delta12, c.gamma12))
}

/// Spectrum on `omega`, normalised to unit maximum. Returns `(values, elastic_weight)`.
#[pyfunction]
#[pyo3(signature = (pair, omega, method = "sensor-scan", linewidth = 1.0, epsilon = 1e-4, tau_max = 50.0, n_tau = 5001))]
#[allow(clippy::too_many_arguments)]
fn spectrum(
    py: Python<'_>,
    pair: &PyEmitterPair,
    omega: Vec<f64>,
    method: &str,
    linewidth: f64,
    epsilon: f64,
    tau_max: f64,
    n_tau: usize,
) -> PyResult<(Vec<f64>, f64)> {
    let c = pair.inner.clone();
    let r = match method {
        "sensor-scan" => py.detach(|| observables::spectrum_sensor_scan(&c, &omega, filter(linewidth, epsilon))),
        "g1-fourier" => py.detach(|| observables::spectrum_fourier(&c, &omega, tau_max, n_tau)),
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be 'sensor-scan' or 'g1-fourier', got '{other}'"
            )))
        }
    }
    .map_err(to_py)?;
    Ok((r.values, r.elastic_weight))
}

/// Unfiltered `g²(τ)` of the detected field.
#[pyfunction]
fn g2_unfiltered(py: Python<'_>, pair: &PyEmitterPair, taus: Vec<f64>) -> PyResult<Vec<f64>> {
    let c = pair.inner.clone();
    py.detach(|| observables::g2_unfiltered(&c, &taus)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (pair, omega1, omega2, linewidth = 1.0, epsilon = 1e-4))]
fn sensor_g2(py: Python<'_>, pair: &PyEmitterPair, omega1: f64, omega2: f64, linewidth: f64, epsilon: f64) -> PyResult<f64> {
    let c = pair.inner.clone();
    py.detach(|| observables::sensor_g2(&c, omega1, omega2, filter(linewidth, epsilon)))
        .map(|p| p.g2)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (pair, omega1, omega2, taus, linewidth = 1.0, epsilon = 1e-4))]
fn sensor_g2_tau(
    py: Python<'_>,
    pair: &PyEmitterPair,
    omega1: f64,
    omega2: f64,
    taus: Vec<f64>,
    linewidth: f64,
    epsilon: f64,
) -> PyResult<Vec<f64>> {
    let c = pair.inner.clone();
    py.detach(|| observables::sensor_g2_tau(&c, omega1, omega2, filter(linewidth, epsilon), &taus))
        .map(|v| v.iter().map(|p| p.g2).collect())
        .map_err(to_py)
}

/// Cauchy-Schwarz ratio. Returns a dict with `ratio`, `g11`, `g22`, `g12`.
#[pyfunction]
#[pyo3(signature = (pair, omega1, omega2, linewidth = 1.0, epsilon = 1e-4))]
fn csi<'py>(
    py: Python<'py>,
    pair: &PyEmitterPair,
    omega1: f64,
    omega2: f64,
    linewidth: f64,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let c = pair.inner.clone();
    let p = py
        .detach(|| nonclassicality::csi_ratio(&c, omega1, omega2, filter(linewidth, epsilon)))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ratio", p.ratio)?;
    d.set_item("g11", p.g11)?;
    d.set_item("g22", p.g22)?;
    d.set_item("g12", p.g12)?;
    Ok(d)
}

/// Bell quantifier `B_s`.
#[pyfunction]
#[pyo3(signature = (pair, omega1, omega2, linewidth = 1.0, epsilon = 1e-4))]
fn bell(py: Python<'_>, pair: &PyEmitterPair, omega1: f64, omega2: f64, linewidth: f64, epsilon: f64) -> PyResult<f64> {
    let c = pair.inner.clone();
    py.detach(|| nonclassicality::bell_quantifier(&c, omega1, omega2, filter(linewidth, epsilon)))
        .map(|b| b.quantifier)
        .map_err(to_py)
}

/// Run a TOML configuration (or a preset name) and return the result table
/// as a dict with `task`, `columns`, `rows`, `flags`, `notes`, `complete`.
#[pyfunction]
#[pyo3(signature = (config, overrides = Vec::new()))]
fn run<'py>(py: Python<'py>, config: &str, overrides: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let (text, origin) = match presets::find(config) {
        Some(p) => (p.toml, format!("preset {}", p.name)),
        None => (config, "<string>".to_string()),
    };
    let cfg = RunConfig::from_toml_str(text, &overrides, &origin).map_err(to_py)?;
    let t = py.detach(|| sweep::run_sweep(&cfg)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("task", t.task.to_string())?;
    d.set_item("columns", t.columns.clone())?;
    d.set_item("rows", t.rows.iter().map(|r| r.values.clone()).collect::<Vec<_>>())?;
    d.set_item("flags", t.rows.iter().map(|r| r.flag.clone()).collect::<Vec<_>>())?;
    d.set_item("notes", t.notes.clone())?;
    d.set_item("complete", t.complete)?;
    Ok(d)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::PRESETS.iter().map(|p| p.name).collect()
}

#[pymodule]
fn pyphotocorr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MAGIC_COS_THETA", MAGIC_COS_THETA)?;
    m.add_class::<PyEmitterPair>()?;
    m.add_function(wrap_pyfunction!(dipole_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(g2_unfiltered, m)?)?;
    m.add_function(wrap_pyfunction!(sensor_g2, m)?)?;
    m.add_function(wrap_pyfunction!(sensor_g2_tau, m)?)?;
    m.add_function(wrap_pyfunction!(csi, m)?)?;
    m.add_function(wrap_pyfunction!(bell, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    Ok(())
}
