//! Python bindings for `abpole`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use abpole::asymptotics as asy;
use abpole::eigen::EigenOptions;
use abpole::extrapolate::ExtrapolationResult;
use abpole::grid::DomainSpec;
use abpole::{identities as ids, profile as prof, slit, Error, Point};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::EvenIndex(_)
        | Error::DegenerateDomain(_)
        | Error::RadiusOutOfRange { .. }
        | Error::PoleOutside(..)
        | Error::PoleOnLattice(..)
        | Error::TooCoarse { .. }
        | Error::MixedNormalization(_)
        | Error::SingularPoint { .. }
        | Error::UndefinedBranch => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn pt((x1, x2): (f64, f64)) -> Point {
    Point::new(x1, x2)
}

fn init_threads() {
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Extrapolated value with its error bar.
#[pyclass(name = "Extrapolation", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyExtrapolation {
    params: Vec<f64>,
    values: Vec<f64>,
    limit: f64,
    error: f64,
    observed_order: Option<f64>,
    used_order: Option<f64>,
    flagged: bool,
}

impl From<&ExtrapolationResult> for PyExtrapolation {
    fn from(e: &ExtrapolationResult) -> Self {
        PyExtrapolation {
            params: e.params.clone(),
            values: e.values.clone(),
            limit: e.limit,
            error: e.error_estimate,
            observed_order: e.observed_order,
            used_order: e.used_order,
            flagged: e.is_flagged(),
        }
    }
}

#[pymethods]
impl PyExtrapolation {
    fn __repr__(&self) -> String {
        format!("Extrapolation(limit={}, error={})", self.limit, self.error)
    }
}

/// Homogeneous polynomial `Σ c_j x₁^{d−j} x₂^j`.
#[pyclass(name = "HomogeneousPoly", frozen)]
struct PyHomogeneousPoly {
    inner: ids::HomogeneousPoly,
}

#[pymethods]
impl PyHomogeneousPoly {
    #[new]
    fn new(coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(PyHomogeneousPoly {
            inner: ids::HomogeneousPoly::new(coeffs).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn harmonic(degree: usize, amplitude: f64, shift: f64) -> Self {
        PyHomogeneousPoly {
            inner: ids::HomogeneousPoly::harmonic(degree, amplitude, shift),
        }
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn __call__(&self, x1: f64, x2: f64) -> f64 {
        self.inner.eval(x1, x2)
    }

    fn angular(&self, alpha: f64) -> f64 {
        self.inner.angular(alpha)
    }

    /// Zeros of `P(cos α, sin α)` in `(0, π)` and whether all `d` were found.
    fn roots(&self) -> PyResult<(Vec<f64>, bool)> {
        let r = ids::factor_roots(&self.inner).map_err(to_py)?;
        Ok((r.roots, r.complete))
    }
}

#[pyfunction]
fn sin_product(k: usize, alpha: f64) -> PyResult<f64> {
    ids::sin_product(k, alpha).map_err(to_py)
}

#[pyfunction]
fn direction_rank(h: usize, k: usize, theta_bar: f64) -> PyResult<usize> {
    ids::direction_rank(h, k, theta_bar).map_err(to_py)
}

#[pyfunction]
fn expected_roots(k: usize, shift: f64) -> Vec<f64> {
    ids::expected_roots(k, shift)
}

/// Lowest eigenvalues of the operator with a pole at `pole` on the disk of
/// the given centre and radius, with cluster sizes.
#[pyfunction]
#[pyo3(signature = (pole, h, count, center=(0.0, 0.0), radius=1.0))]
fn disk_eigenvalues(
    py: Python<'_>,
    pole: (f64, f64),
    h: f64,
    count: usize,
    center: (f64, f64),
    radius: f64,
) -> PyResult<(Vec<f64>, Vec<usize>)> {
    init_threads();
    let spec = DomainSpec::disk(pt(center), radius);
    let s = py
        .detach(|| asy::solve_at_pole(&spec, pt(pole), h, count, &EigenOptions::default()))
        .map_err(to_py)?;
    let mult = (0..s.values.len())
        .map(|i| s.clusters.iter().find(|c| c.contains(&i)).map_or(1, Vec::len))
        .collect();
    Ok((s.values, mult))
}

#[pyclass(name = "MkEstimate", frozen, get_all)]
struct PyMkEstimate {
    k: usize,
    energy: PyExtrapolation,
    boundary: PyExtrapolation,
    /// `(h, R, energy value, boundary value)` per solve.
    rows: Vec<(f64, f64, f64, f64)>,
}

#[pymethods]
impl PyMkEstimate {
    #[getter]
    fn value(&self) -> f64 {
        self.energy.limit
    }

    fn __repr__(&self) -> String {
        format!("MkEstimate(k={}, value={}, error={})", self.k, self.energy.limit, self.energy.error)
    }
}

#[pyfunction]
fn compute_mk(py: Python<'_>, k: usize, h_seq: Vec<f64>, r_seq: Vec<f64>) -> PyResult<PyMkEstimate> {
    init_threads();
    let e = py.detach(|| slit::compute_mk(k, &h_seq, &r_seq)).map_err(to_py)?;
    Ok(PyMkEstimate {
        k,
        energy: (&e.energy).into(),
        boundary: (&e.boundary).into(),
        rows: e.rows.iter().map(|r| (r.h, r.r_trunc, r.m_energy, r.m_boundary)).collect(),
    })
}

#[pyclass(name = "ProfileRow", frozen, get_all)]
struct PyProfileRow {
    k: usize,
    alpha: f64,
    r_trunc: f64,
    h: f64,
    upsilon_one: (f64, f64),
    fit_a: (f64, f64),
    fit_b: (f64, f64),
    fit_rms: f64,
    kappa: (f64, f64),
}

impl From<&prof::ProfileRow> for PyProfileRow {
    fn from(r: &prof::ProfileRow) -> Self {
        PyProfileRow {
            k: r.k,
            alpha: r.alpha,
            r_trunc: r.r_trunc,
            h: r.h,
            upsilon_one: (r.upsilon_one[0], r.upsilon_one[1]),
            fit_a: (r.fit.a[0], r.fit.a[1]),
            fit_b: (r.fit.b[0], r.fit.b[1]),
            fit_rms: r.fit.relative_rms,
            kappa: (r.kappa[0], r.kappa[1]),
        }
    }
}

/// One limit-profile solve summarized by its angular coefficient.
#[pyfunction]
fn profile_row(py: Python<'_>, k: usize, alpha: f64, r_trunc: f64, h: f64) -> PyResult<PyProfileRow> {
    init_threads();
    let p = prof::ProfileProblem::new(k, alpha, r_trunc, h).map_err(to_py)?;
    let row = py.detach(|| prof::profile_row(&p)).map_err(to_py)?;
    Ok((&row).into())
}

/// `υ_R(r)` as `(r, re, im)` triples at the given radii.
#[pyfunction]
fn upsilon(py: Python<'_>, k: usize, alpha: f64, r_trunc: f64, h: f64, radii: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    init_threads();
    let p = prof::ProfileProblem::new(k, alpha, r_trunc, h).map_err(to_py)?;
    let samples = py
        .detach(|| prof::solve_wr(&p).and_then(|s| prof::compute_upsilon(&s, &radii)))
        .map_err(to_py)?;
    Ok(samples.iter().map(|s| (s.r, s.re, s.im)).collect())
}

#[pyclass(name = "FAlpha", frozen, get_all)]
struct PyFAlpha {
    alpha: f64,
    k: usize,
    value: f64,
    error: f64,
    xi: (f64, f64),
    spacing: PyExtrapolation,
}

#[pymethods]
impl PyFAlpha {
    fn __repr__(&self) -> String {
        format!("FAlpha(alpha={}, value={}, error={})", self.alpha, self.value, self.error)
    }
}

#[pyfunction]
fn xi_and_f(py: Python<'_>, k: usize, alpha: f64, r_seq: Vec<f64>, h_seq: Vec<f64>) -> PyResult<PyFAlpha> {
    init_threads();
    let f = py.detach(|| prof::xi_and_f(k, alpha, &r_seq, &h_seq)).map_err(to_py)?;
    Ok(PyFAlpha {
        alpha: f.alpha,
        k: f.k,
        value: f.value,
        error: f.error,
        xi: (f.xi[0], f.xi[1]),
        spacing: (&f.spacing).into(),
    })
}

#[pyclass(name = "SweepConfig", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PySweepConfig {
    center: (f64, f64),
    radius: f64,
    base: (f64, f64),
    index: usize,
    radii: Vec<f64>,
    angles: Vec<f64>,
    h_seq: Vec<f64>,
}

#[pymethods]
impl PySweepConfig {
    #[new]
    #[pyo3(signature = (base, radii, angles, h_seq, index=1, center=(0.0, 0.0), radius=1.0))]
    fn new(
        base: (f64, f64),
        radii: Vec<f64>,
        angles: Vec<f64>,
        h_seq: Vec<f64>,
        index: usize,
        center: (f64, f64),
        radius: f64,
    ) -> Self {
        PySweepConfig {
            center,
            radius,
            base,
            index,
            radii,
            angles,
            h_seq,
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.core().validate().map_err(to_py)
    }
}

impl PySweepConfig {
    fn core(&self) -> asy::SweepConfig {
        asy::SweepConfig {
            domain: DomainSpec::disk(pt(self.center), self.radius),
            base: pt(self.base),
            index: self.index,
            radii: self.radii.clone(),
            angles: self.angles.clone(),
            h_seq: self.h_seq.clone(),
        }
    }
}

#[pyclass(name = "SweepResult", frozen)]
struct PySweepResult {
    inner: asy::SweepResult,
}

#[pymethods]
impl PySweepResult {
    #[getter]
    fn lambda0(&self) -> PyExtrapolation {
        (&self.inner.lambda0).into()
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.gap
    }

    /// `(alpha, radius, λ₀ − λ_a, error)` for every pole that solved.
    #[getter]
    fn rows(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .rows
            .iter()
            .filter_map(|r| r.difference.as_ref().map(|d| (r.alpha, r.radius, d.limit, d.error_estimate)))
            .collect()
    }

    #[getter]
    fn failures(&self) -> Vec<(f64, f64, String)> {
        self.inner
            .rows
            .iter()
            .filter_map(|r| r.failure.clone().map(|f| (r.alpha, r.radius, f)))
            .collect()
    }

    fn directional_limit(&self, alpha: f64, k: usize) -> PyResult<PyExtrapolation> {
        Ok((&asy::directional_limit(&self.inner, alpha, k).map_err(to_py)?).into())
    }

    fn fit_polynomial(&self, k: usize) -> PyResult<PyPolyFit> {
        Ok(PyPolyFit {
            inner: asy::fit_polynomial(&self.inner, k).map_err(to_py)?,
        })
    }
}

#[pyfunction]
#[pyo3(signature = (config, jobs=1))]
fn run_sweep(py: Python<'_>, config: &PySweepConfig, jobs: usize) -> PyResult<PySweepResult> {
    init_threads();
    let cfg = config.core();
    let inner = py
        .detach(|| asy::run_sweep(&cfg, &EigenOptions::default(), jobs))
        .map_err(to_py)?;
    Ok(PySweepResult { inner })
}

#[pyclass(name = "LocalExpansion", frozen)]
struct PyLocalExpansion {
    inner: abpole::expansion::LocalExpansion,
}

#[pymethods]
impl PyLocalExpansion {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn beta1(&self) -> (f64, f64) {
        (self.inner.beta1.re, self.inner.beta1.im)
    }

    #[getter]
    fn beta2(&self) -> (f64, f64) {
        (self.inner.beta2.re, self.inner.beta2.im)
    }

    #[getter]
    fn alpha0(&self) -> f64 {
        self.inner.alpha0
    }

    #[getter]
    fn beta_error(&self) -> f64 {
        self.inner.beta_error
    }

    #[getter]
    fn amplitude_sq(&self) -> f64 {
        self.inner.amplitude_sq()
    }
}

/// Local expansion at the base pole of `config`, on the given circle radii.
#[pyfunction]
fn base_expansion(py: Python<'_>, config: &PySweepConfig, radii: Vec<f64>) -> PyResult<PyLocalExpansion> {
    init_threads();
    let cfg = config.core();
    let inner = py
        .detach(|| asy::base_expansion(&cfg, &radii, &EigenOptions::default()))
        .map_err(to_py)?;
    Ok(PyLocalExpansion { inner })
}

#[pyclass(name = "PolyFit", frozen)]
struct PyPolyFit {
    inner: asy::PolyFit,
}

#[pymethods]
impl PyPolyFit {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    #[getter]
    fn coeff_errors(&self) -> Vec<f64> {
        self.inner.coeff_errors.clone()
    }

    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }

    #[getter]
    fn alpha0(&self) -> f64 {
        self.inner.alpha0_fit
    }

    fn angular(&self, alpha: f64) -> f64 {
        self.inner.angular(alpha)
    }
}

/// Fit of `(a₁, a₂, λ₀ − λ_a, error)` rows.
#[pyfunction]
fn fit_points(rows: Vec<(f64, f64, f64, f64)>, k: usize) -> PyResult<PyPolyFit> {
    let pts: Vec<(Point, f64, f64)> = rows.into_iter().map(|(a1, a2, d, e)| (Point::new(a1, a2), d, e)).collect();
    Ok(PyPolyFit {
        inner: asy::fit_polynomial_points(&pts, k).map_err(to_py)?,
    })
}

#[pyclass(name = "TheoremReport", frozen, get_all)]
struct PyTheoremReport {
    k: usize,
    mk: f64,
    amplitude_sq: f64,
    c0_predicted: f64,
    c0_fitted: f64,
    c0_relative_error: f64,
    alpha0_expansion: f64,
    alpha0_fit: f64,
    alpha0_difference: f64,
    harmonicity_defect: f64,
    lower_degrees_vanish: bool,
}

#[pyfunction]
fn check_theorem(fit: &PyPolyFit, expansion: &PyLocalExpansion, mk: f64) -> PyResult<PyTheoremReport> {
    let r = asy::check_theorem(&fit.inner, &expansion.inner, mk).map_err(to_py)?;
    Ok(PyTheoremReport {
        k: r.k,
        mk: r.mk,
        amplitude_sq: r.amplitude_sq,
        c0_predicted: r.c0_predicted,
        c0_fitted: r.c0_fitted,
        c0_relative_error: r.c0_relative_error,
        alpha0_expansion: r.alpha0_expansion,
        alpha0_fit: r.alpha0_fit,
        alpha0_difference: r.alpha0_difference,
        harmonicity_defect: r.harmonicity_defect,
        lower_degrees_vanish: r.lower_degrees_vanish,
    })
}

/// Runs the command-line driver with `argv` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, argv: Vec<String>) -> i32 {
    let full: Vec<String> = std::iter::once("abpole".to_string()).chain(argv).collect();
    py.detach(|| abpole::cli::main_with_args(full))
}

#[pymodule]
fn abpole_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExtrapolation>()?;
    m.add_class::<PyHomogeneousPoly>()?;
    m.add_class::<PyMkEstimate>()?;
    m.add_class::<PyProfileRow>()?;
    m.add_class::<PyFAlpha>()?;
    m.add_class::<PySweepConfig>()?;
    m.add_class::<PySweepResult>()?;
    m.add_class::<PyLocalExpansion>()?;
    m.add_class::<PyPolyFit>()?;
    m.add_class::<PyTheoremReport>()?;
    m.add_function(wrap_pyfunction!(sin_product, m)?)?;
    m.add_function(wrap_pyfunction!(direction_rank, m)?)?;
    m.add_function(wrap_pyfunction!(expected_roots, m)?)?;
    m.add_function(wrap_pyfunction!(disk_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(compute_mk, m)?)?;
    m.add_function(wrap_pyfunction!(profile_row, m)?)?;
    m.add_function(wrap_pyfunction!(upsilon, m)?)?;
    m.add_function(wrap_pyfunction!(xi_and_f, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(base_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(fit_points, m)?)?;
    m.add_function(wrap_pyfunction!(check_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
