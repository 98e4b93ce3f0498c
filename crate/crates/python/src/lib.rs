//! Python bindings for `elgof`.

use elgof::distributions::{self, CalibrationMethod, Law};
use elgof::gof_tests::TestOptions;
use elgof::simulation::{self, NullScenario, NullStudySpec};
use elgof::{
    default_basis_size, empirical_uniform_ranks, hull_interior_check, quadratic_approx_gap,
    ConstraintMatrix, ElError, ElSolution, MarginSpec, ParametricFamily, ParametricModel,
    RegressionMethod, SolverOptions, TestKind, TestResult,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: ElError) -> PyErr {
    match e {
        ElError::SolverFailure(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = ElError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<ConstraintMatrix> {
    ConstraintMatrix::from_rows(&rows).map_err(py_err)
}

#[pyclass(name = "ElSolution", frozen, skip_from_py_object)]
struct PyElSolution(ElSolution);

#[pymethods]
impl PyElSolution {
    #[getter]
    fn zeta(&self) -> Vec<f64> {
        self.0.zeta.clone()
    }
    #[getter]
    fn neg2_log_el(&self) -> f64 {
        self.0.neg2_log_el
    }
    #[getter]
    fn feasible(&self) -> bool {
        self.0.feasible
    }
    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }
    #[getter]
    fn hull_criterion(&self) -> bool {
        self.0.hull_criterion
    }
    #[getter]
    fn degenerate(&self) -> bool {
        self.0.degenerate
    }
    #[getter]
    fn residual_norm(&self) -> f64 {
        self.0.residual_norm
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }
    #[getter]
    fn quadratic_approx(&self) -> f64 {
        self.0.quadratic_approx
    }

    fn quadratic_approx_gap(&self) -> f64 {
        quadratic_approx_gap(&self.0, self.0.zeta.len())
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "ElSolution(neg2_log_el={}, feasible={}, converged={})",
            self.0.neg2_log_el, self.0.feasible, self.0.converged
        )
    }
}

#[pyclass(name = "TestResult", frozen, skip_from_py_object)]
struct PyTestResult(TestResult);

#[pymethods]
impl PyTestResult {
    #[getter]
    fn test(&self) -> String {
        self.0.test.to_string()
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn statistic(&self) -> f64 {
        self.0.statistic
    }
    #[getter]
    fn df(&self) -> usize {
        self.0.df
    }
    #[getter]
    fn p_value(&self) -> f64 {
        self.0.p_value
    }
    #[getter]
    fn infeasible(&self) -> bool {
        self.0.infeasible
    }
    #[getter]
    fn solver(&self) -> PyElSolution {
        PyElSolution(self.0.solver.clone())
    }

    fn rejects_at(&self, alpha: f64) -> bool {
        self.0.rejects_at(alpha)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "TestResult(test='{}', statistic={}, df={}, p_value={})",
            self.0.test, self.0.statistic, self.0.df, self.0.p_value
        )
    }
}

#[pyfunction]
fn phi(k: usize, x: f64) -> PyResult<f64> {
    elgof::phi(k, x).map_err(py_err)
}

#[pyfunction]
fn ranks(data: Vec<f64>) -> Vec<f64> {
    empirical_uniform_ranks(&data)
}

/// Returns a dict with xbar, lambda, big_lambda, xstar and hull_interior.
#[pyfunction]
fn spectral_summary<'py>(py: Python<'py>, rows: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let s = elgof::spectral_summary(&matrix(rows)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("xbar", s.xbar.clone())?;
    d.set_item("lambda", s.lambda)?;
    d.set_item("big_lambda", s.big_lambda)?;
    d.set_item("xstar", s.xstar)?;
    d.set_item("hull_interior", hull_interior_check(&s))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (rows, grad_tol = 1e-10, max_iter = 100))]
fn solve_dual(rows: Vec<Vec<f64>>, grad_tol: f64, max_iter: usize) -> PyResult<PyElSolution> {
    let opts = SolverOptions {
        grad_tol,
        max_iter,
        ..Default::default()
    };
    let sol = elgof::solve_dual(&matrix(rows)?, &opts).map_err(py_err)?;
    Ok(PyElSolution(sol))
}

#[pyfunction]
fn chisq_cdf(x: f64, k: usize) -> PyResult<f64> {
    distributions::chisq_cdf(x, k).map_err(py_err)
}

#[pyfunction]
fn chisq_sf(x: f64, k: usize) -> PyResult<f64> {
    distributions::chisq_sf(x, k).map_err(py_err)
}

#[pyfunction]
fn chisq_quantile(p: f64, k: usize) -> PyResult<f64> {
    distributions::chisq_quantile(p, k).map_err(py_err)
}

#[pyfunction]
fn normal_cdf(z: f64) -> f64 {
    distributions::normal_cdf(z)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    distributions::normal_quantile(p).map_err(py_err)
}

fn options(alphas: Option<Vec<f64>>, calibration: &str) -> PyResult<TestOptions> {
    let mut opts = TestOptions::with_calibration(parse::<CalibrationMethod>(calibration)?);
    if let Some(a) = alphas {
        opts.alphas = a;
    }
    Ok(opts)
}

fn basis(given: Option<usize>, n: usize, kind: TestKind) -> usize {
    given.unwrap_or_else(|| default_basis_size(n, kind))
}

/// `f0` is a law such as "uniform01", "normal:0,1", "t3" or "exp:5".
#[pyfunction]
#[pyo3(signature = (data, f0, m = None, alphas = None, calibration = "chi-square"))]
fn test_fixed_distribution(
    data: Vec<f64>,
    f0: &str,
    m: Option<usize>,
    alphas: Option<Vec<f64>>,
    calibration: &str,
) -> PyResult<PyTestResult> {
    let law: Law = parse(f0)?;
    let m = basis(m, data.len(), TestKind::FixedDist);
    elgof::test_fixed_distribution(&data, &law, m, &options(alphas, calibration)?)
        .map(PyTestResult)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (data, family = "normal", m = None, alphas = None, calibration = "chi-square"))]
fn test_parametric(
    data: Vec<f64>,
    family: &str,
    m: Option<usize>,
    alphas: Option<Vec<f64>>,
    calibration: &str,
) -> PyResult<PyTestResult> {
    let family: ParametricFamily = parse(family)?;
    let m = m.unwrap_or_else(|| {
        default_basis_size(data.len(), TestKind::Parametric).max(family.dim() + 1)
    });
    elgof::test_parametric(&data, &family, m, &options(alphas, calibration)?)
        .map(PyTestResult)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (data, m = None, alphas = None, calibration = "chi-square"))]
fn test_symmetry(
    data: Vec<f64>,
    m: Option<usize>,
    alphas: Option<Vec<f64>>,
    calibration: &str,
) -> PyResult<PyTestResult> {
    let m = basis(m, data.len(), TestKind::Symmetry);
    elgof::test_symmetry(&data, m, &options(alphas, calibration)?)
        .map(PyTestResult)
        .map_err(py_err)
}

/// With `fx` and `fy` given the margins are known laws; otherwise ranks are
/// used.
#[pyfunction]
#[pyo3(signature = (x, y, r = None, fx = None, fy = None, alphas = None, calibration = "chi-square"))]
fn test_independence(
    x: Vec<f64>,
    y: Vec<f64>,
    r: Option<usize>,
    fx: Option<&str>,
    fy: Option<&str>,
    alphas: Option<Vec<f64>>,
    calibration: &str,
) -> PyResult<PyTestResult> {
    let r = basis(r, x.len(), TestKind::Independence);
    let opts = options(alphas, calibration)?;
    let res = match (fx, fy) {
        (Some(a), Some(b)) => {
            let (lx, ly): (Law, Law) = (parse(a)?, parse(b)?);
            elgof::test_independence(&x, &y, r, MarginSpec::Known { x: &lx, y: &ly }, &opts)
        }
        (None, None) => elgof::test_independence(&x, &y, r, MarginSpec::Empirical, &opts),
        _ => return Err(PyValueError::new_err("give both fx and fy, or neither")),
    };
    res.map(PyTestResult).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, y, theta0, method = "delta1", r = None, alphas = None, calibration = "chi-square"))]
fn test_regression_coef(
    x: Vec<f64>,
    y: Vec<f64>,
    theta0: (f64, f64),
    method: &str,
    r: Option<usize>,
    alphas: Option<Vec<f64>>,
    calibration: &str,
) -> PyResult<PyTestResult> {
    let method = match method {
        "delta0" => RegressionMethod::Delta0,
        "delta1" => RegressionMethod::Delta1 {
            r: basis(r, x.len(), TestKind::Regression),
        },
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let opts = options(alphas, calibration)?;
    elgof::test_regression_coef(&x, &y, [theta0.0, theta0.1], method, &opts)
        .map(PyTestResult)
        .map_err(py_err)
}

/// Runs the regression power grid and returns it as a JSON string.
#[pyfunction]
#[pyo3(signature = (reps, seed, n = 100, alpha = 0.05))]
fn table1(py: Python<'_>, reps: usize, seed: u64, n: usize, alpha: f64) -> PyResult<String> {
    let table = py
        .detach(|| {
            simulation::power_study(
                &simulation::table1_designs(n),
                &simulation::table1_methods(),
                alpha,
                reps,
                seed,
            )
        })
        .map_err(py_err)?;
    to_json(&table)
}

/// Rejection rate of a test on synthetic null data. `test` is one of
/// fixed-dist, parametric, symmetry, independence.
#[pyfunction]
#[pyo3(signature = (test, n, basis_size, reps, seed, alpha = 0.05, empirical_margins = false))]
#[allow(clippy::too_many_arguments)]
fn null_calibration_study<'py>(
    py: Python<'py>,
    test: &str,
    n: usize,
    basis_size: usize,
    reps: usize,
    seed: u64,
    alpha: f64,
    empirical_margins: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = match test {
        "fixed-dist" => TestKind::FixedDist,
        "parametric" => TestKind::Parametric,
        "symmetry" => TestKind::Symmetry,
        "independence" => TestKind::Independence,
        other => {
            return Err(PyValueError::new_err(format!(
                "no null study for `{other}`"
            )))
        }
    };
    let mut scenario = NullScenario::default_for(kind).expect("univariate or independence");
    if let NullScenario::Independence {
        empirical_margins: e,
        ..
    } = &mut scenario
    {
        *e = empirical_margins;
    }
    let spec = NullStudySpec {
        scenario,
        n,
        basis_size,
        alpha,
        reps,
        seed,
        calibration: CalibrationMethod::ChiSquare,
    };
    let res = py
        .detach(|| simulation::null_calibration_study(&spec))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rate", res.rate)?;
    d.set_item("stderr", res.stderr)?;
    d.set_item("reps", res.reps)?;
    d.set_item("failed", res.failed)?;
    d.set_item("infeasible", res.infeasible)?;
    Ok(d)
}

#[pymodule]
fn elgof_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyElSolution>()?;
    m.add_class::<PyTestResult>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(ranks, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_summary, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dual, m)?)?;
    m.add_function(wrap_pyfunction!(chisq_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(chisq_sf, m)?)?;
    m.add_function(wrap_pyfunction!(chisq_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(test_fixed_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(test_parametric, m)?)?;
    m.add_function(wrap_pyfunction!(test_symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(test_independence, m)?)?;
    m.add_function(wrap_pyfunction!(test_regression_coef, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(null_calibration_study, m)?)?;
    Ok(())
}
