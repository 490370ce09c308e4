//! Python bindings for `sphfield`.
//!
//! Points cross the boundary as `(theta, phi)` tuples in radians.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sphfield::bump::{b_ell as core_b_ell, BumpProfile, SmoothingKernel};
use sphfield::field::{covariance_at, pseudo_diff, FieldRealization};
use sphfield::modulus::{run_modulus_experiment, separated_sequence as core_separated_sequence, ModulusExperiment};
use sphfield::slnd::{
    conditional_variance as core_conditional_variance, quadratic_form_min as core_quadratic_form_min, slnd_scan as core_slnd_scan,
    ConditioningConfig, ScanConfig,
};
use sphfield::special::{legendre_p as core_legendre_p, polylog as core_polylog, riemann_zeta as core_riemann_zeta};
use sphfield::variogram::variogram as core_variogram;
use sphfield::{AccuracyPolicy, Envelope, Error, PowerSpectrum, SpherePoint};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Range(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        Error::Budget(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn point(p: (f64, f64)) -> SpherePoint {
    SpherePoint::from_angles(p.0, p.1)
}

/// Angular power spectrum C_ℓ = G(ℓ)·ℓ^{−α}.
#[pyclass(name = "PowerSpectrum", module = "sphfield_py", frozen)]
struct PySpectrum {
    inner: PowerSpectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (alpha, l_max, envelope = "constant:1", c0 = None))]
    fn new(alpha: f64, l_max: usize, envelope: &str, c0: Option<f64>) -> PyResult<Self> {
        let env: Envelope = envelope.parse().map_err(to_py)?;
        let c0 = c0.unwrap_or_else(|| env.minimal_bound());
        Ok(Self {
            inner: PowerSpectrum::new(alpha, env, c0, l_max).map_err(to_py)?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn l_max(&self) -> usize {
        self.inner.l_max()
    }

    #[getter]
    fn effective_alpha(&self) -> f64 {
        self.inner.effective_alpha()
    }

    fn value(&self, ell: usize) -> PyResult<f64> {
        self.inner.value(ell).map_err(to_py)
    }

    /// C_0..C_lmax with C_0 = 0.
    fn values(&self) -> Vec<f64> {
        self.inner.values()
    }

    /// (variance, tail bound).
    fn total_variance(&self) -> (f64, f64) {
        let t = self.inner.total_variance();
        (t.value, t.tail_bound)
    }

    fn derived(&self, k: u32) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.derived(k).map_err(to_py)?,
        })
    }

    fn to_config_string(&self) -> String {
        self.inner.to_config_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "PowerSpectrum(alpha={}, l_max={}, envelope='{}')",
            self.inner.alpha(),
            self.inner.l_max(),
            self.inner.envelope()
        )
    }
}

/// One sampled field.
#[pyclass(name = "Field", module = "sphfield_py", frozen)]
struct PyField {
    inner: FieldRealization,
}

#[pymethods]
impl PyField {
    #[staticmethod]
    #[pyo3(signature = (spectrum, seed, replicate = 0))]
    fn sample(py: Python<'_>, spectrum: PyRef<'_, PySpectrum>, seed: u64, replicate: u64) -> Self {
        let spec = spectrum.inner.clone();
        let inner = py.detach(|| FieldRealization::sample(&spec, seed, replicate));
        Self { inner }
    }

    fn evaluate(&self, py: Python<'_>, points: Vec<(f64, f64)>) -> PyResult<Vec<f64>> {
        let pts: Vec<SpherePoint> = points.into_iter().map(point).collect();
        py.detach(|| self.inner.evaluate(&pts)).map_err(to_py)
    }

    fn coefficient(&self, ell: usize, m: i64) -> PyResult<Complex64> {
        self.inner.coefficients().get(ell, m).map_err(to_py)
    }

    /// (1 − Δ)^{k/2} applied to the field.
    fn pseudo_diff(&self, k: u32) -> Self {
        Self {
            inner: pseudo_diff(&self.inner, k),
        }
    }

    fn variance_diverges_in_limit(&self) -> bool {
        self.inner.variance_diverges_in_limit()
    }

    #[getter]
    fn spectrum(&self) -> PySpectrum {
        PySpectrum {
            inner: self.inner.spectrum().clone(),
        }
    }
}

#[pyfunction]
fn rho_alpha(alpha: f64, t: f64) -> PyResult<f64> {
    sphfield::rho_alpha(alpha, t).map_err(to_py)
}

#[pyfunction]
fn legendre_p(ell: usize, t: f64) -> PyResult<f64> {
    core_legendre_p(ell, t).map_err(to_py)
}

#[pyfunction]
fn riemann_zeta(s: f64) -> PyResult<f64> {
    core_riemann_zeta(s).map_err(to_py)
}

/// Li_s(e^{iψ}).
#[pyfunction]
fn polylog(s: f64, psi: f64) -> PyResult<Complex64> {
    core_polylog(s, psi, &AccuracyPolicy::default()).map_err(to_py)
}

/// (d_T², tail bound) at geodesic distance `theta`.
#[pyfunction]
fn variogram(spectrum: PyRef<'_, PySpectrum>, theta: f64) -> PyResult<(f64, f64)> {
    let t = core_variogram(&spectrum.inner, theta).map_err(to_py)?;
    Ok((t.value, t.tail_bound))
}

/// (covariance, tail bound) at geodesic distance `theta`.
#[pyfunction]
fn covariance(spectrum: PyRef<'_, PySpectrum>, theta: f64) -> (f64, f64) {
    let t = covariance_at(&spectrum.inner, theta.cos());
    (t.value, t.tail_bound)
}

fn conditioning(spectrum: &PySpectrum, x0: (f64, f64), points: Vec<(f64, f64)>) -> PyResult<ConditioningConfig> {
    ConditioningConfig::new(point(x0), points.into_iter().map(point).collect(), spectrum.inner.clone()).map_err(to_py)
}

/// Var(T(x0) | T(x1), …, T(xn)) by the Schur complement.
#[pyfunction]
fn conditional_variance(spectrum: PyRef<'_, PySpectrum>, x0: (f64, f64), points: Vec<(f64, f64)>) -> PyResult<f64> {
    core_conditional_variance(&conditioning(&spectrum, x0, points)?).map_err(to_py)
}

/// The same variance by harmonic-space least squares.
#[pyfunction]
fn quadratic_form_min(spectrum: PyRef<'_, PySpectrum>, x0: (f64, f64), points: Vec<(f64, f64)>) -> PyResult<f64> {
    core_quadratic_form_min(&conditioning(&spectrum, x0, points)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (epsilon, ell, order = 2))]
fn b_ell(epsilon: f64, ell: usize, order: usize) -> PyResult<f64> {
    let k = SmoothingKernel::new(order).map_err(to_py)?;
    core_b_ell(&k, epsilon, ell).map_err(to_py)
}

/// δ_ε at each angle.
#[pyfunction]
#[pyo3(signature = (epsilon, thetas, l_max = 4096, order = 2))]
fn bump_delta(py: Python<'_>, epsilon: f64, thetas: Vec<f64>, l_max: usize, order: usize) -> PyResult<Vec<f64>> {
    py.detach(|| {
        let k = SmoothingKernel::new(order)?;
        BumpProfile::new(&k, epsilon, l_max)?.delta_grid(&thetas)
    })
    .map_err(to_py)
}

/// Points (theta, phi) of the level-n separated sequence.
#[pyfunction]
fn separated_sequence(n: u32) -> PyResult<Vec<(f64, f64)>> {
    let s = core_separated_sequence(n).map_err(to_py)?;
    Ok(s.points.iter().map(|p| (p.theta(), p.phi())).collect())
}

/// Conditional-variance scan; returns a dict of columns and summaries.
#[pyfunction]
#[pyo3(signature = (alpha, epsilons, n = 4, geometry = "ring", replicates = 100, seed = 0, exploratory = false))]
#[allow(clippy::too_many_arguments)]
fn slnd_scan<'py>(
    py: Python<'py>,
    alpha: f64,
    epsilons: Vec<f64>,
    n: usize,
    geometry: &str,
    replicates: usize,
    seed: u64,
    exploratory: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ScanConfig {
        alpha,
        epsilons,
        n,
        geometry: geometry.parse().map_err(to_py)?,
        replicates,
        seed,
        exploratory,
    };
    let rep = py.detach(|| core_slnd_scan(&cfg)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("epsilon", rep.rows.iter().map(|r| r.epsilon).collect::<Vec<_>>())?;
    d.set_item("replicate", rep.rows.iter().map(|r| r.replicate).collect::<Vec<_>>())?;
    d.set_item("min_dist", rep.rows.iter().map(|r| r.min_dist).collect::<Vec<_>>())?;
    d.set_item("var", rep.rows.iter().map(|r| r.var).collect::<Vec<_>>())?;
    d.set_item("ratio_c2", rep.rows.iter().map(|r| r.ratio_c2).collect::<Vec<_>>())?;
    d.set_item("ratio_nd", rep.rows.iter().map(|r| r.ratio_nd).collect::<Vec<_>>())?;
    d.set_item("min_ratio", rep.min_ratio)?;
    d.set_item("slope", rep.slope)?;
    d.set_item("c2_empirical", rep.estimate.value)?;
    d.set_item("collapsed", rep.collapsed)?;
    d.set_item("non_certifying", rep.non_certifying)?;
    Ok(d)
}

/// Empirical modulus of continuity at scales 2^{-j}; returns a dict of per-scale summaries.
#[pyfunction]
#[pyo3(signature = (spectrum, levels, replicates = 20, pairs_per_scale = 200, kind = "rho_form", k = 0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn modulus_experiment<'py>(
    py: Python<'py>,
    spectrum: PyRef<'py, PySpectrum>,
    levels: Vec<u32>,
    replicates: usize,
    pairs_per_scale: usize,
    kind: &str,
    k: u32,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let exp = ModulusExperiment {
        spec: spectrum.inner.clone(),
        levels,
        replicates,
        pairs_per_scale,
        kind: kind.parse().map_err(to_py)?,
        derivative_order: k,
        seed,
    };
    let rep = py.detach(|| run_modulus_experiment(&exp)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("scales", rep.scales)?;
    d.set_item("resolved", rep.resolved)?;
    d.set_item("medians", rep.medians)?;
    d.set_item("maxima", rep.maxima)?;
    d.set_item("median_spread", rep.median_spread)?;
    d.set_item("estimate", rep.estimate.map(|e| e.value))?;
    d.set_item("under_resolved", rep.under_resolved)?;
    Ok(d)
}

#[pymodule]
fn sphfield_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(rho_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_p, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(polylog, m)?)?;
    m.add_function(wrap_pyfunction!(variogram, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_variance, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_form_min, m)?)?;
    m.add_function(wrap_pyfunction!(b_ell, m)?)?;
    m.add_function(wrap_pyfunction!(bump_delta, m)?)?;
    m.add_function(wrap_pyfunction!(separated_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(slnd_scan, m)?)?;
    m.add_function(wrap_pyfunction!(modulus_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
