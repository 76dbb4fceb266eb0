//! Python bindings: pre-training, tuned kernels, GP posteriors, ask/tell
//! sessions and the benchmark runner.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use tpbo_core::bench::{self, BenchmarkSpec, Method, TestFunction};
use tpbo_core::bo::{AcquisitionSpec, BoSession as CoreSession};
use tpbo_core::gp::{Covariance, GpPosterior as CoreGp};
use tpbo_core::pretrain::{self as core_pretrain, AuxDataset};
use tpbo_core::{AuxModel as CoreModel, Error, FreeKernelSpec, HyperGrid, KernelFamily, Task};

create_exception!(tpbo, VanishingKernelError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::VanishingKernel { .. } => VanishingKernelError::new_err(e.to_string()),
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Base free kernel: family plus `nu`, `degree` and `offset`.
#[pyclass(name = "FreeKernel", module = "tpbo", from_py_object)]
#[derive(Clone)]
struct PyFreeKernel {
    inner: FreeKernelSpec,
}

#[pymethods]
impl PyFreeKernel {
    #[new]
    #[pyo3(signature = (family, nu=1.0, degree=2, offset=1.0))]
    fn new(family: &str, nu: f64, degree: u32, offset: f64) -> PyResult<Self> {
        let family: KernelFamily = family.parse().map_err(to_py)?;
        Ok(PyFreeKernel { inner: FreeKernelSpec::new(family, nu, degree, offset).map_err(to_py)? })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }

    /// `K_m(x_1, ..., x_m)` for an even number of points.
    fn eval(&self, points: Vec<Vec<f64>>) -> PyResult<f64> {
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        self.inner.eval(&refs).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "FreeKernel(family='{}', nu={}, degree={}, offset={})",
            self.inner.family.name(),
            self.inner.nu,
            self.inner.degree,
            self.inner.offset
        )
    }
}

/// Re-weighted covariance built from SVM duals on auxiliary points.
#[pyclass(name = "TunedKernel", module = "tpbo", from_py_object)]
#[derive(Clone)]
struct PyTunedKernel {
    inner: Arc<tpbo_core::TunedKernel>,
}

#[pymethods]
impl PyTunedKernel {
    #[new]
    fn new(base: &PyFreeKernel, aux_points: Vec<Vec<f64>>, alpha: Vec<f64>) -> PyResult<Self> {
        let k = tpbo_core::TunedKernel::new(base.inner, aux_points, alpha).map_err(to_py)?;
        Ok(PyTunedKernel { inner: Arc::new(k) })
    }

    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x, &y).map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha().to_vec()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }
}

/// Result of pre-training.
#[pyclass(name = "AuxModel", module = "tpbo", from_py_object)]
#[derive(Clone)]
struct PyAuxModel {
    inner: CoreModel,
}

#[pymethods]
impl PyAuxModel {
    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.alpha.clone()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.kernel.nu
    }

    #[getter]
    fn loo_error(&self) -> f64 {
        self.inner.loo_error
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim
    }

    fn tuned_kernel(&self) -> PyResult<PyTunedKernel> {
        let k = core_pretrain::build_tuned(&self.inner).map_err(to_py)?;
        Ok(PyTunedKernel { inner: Arc::new(k) })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyAuxModel { inner: CoreModel::from_json(text).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyAuxModel { inner: CoreModel::load(path).map_err(to_py)? })
    }
}

/// Pre-trains on normalized data; pass `raw=True` to min/max-normalize first.
#[pyfunction]
#[pyo3(signature = (inputs, targets, task, kernel, nu_grid=None, lambda_grid=None, raw=false))]
fn pretrain(
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    task: &str,
    kernel: &PyFreeKernel,
    nu_grid: Option<Vec<f64>>,
    lambda_grid: Option<Vec<f64>>,
    raw: bool,
) -> PyResult<PyAuxModel> {
    let task: Task = task.parse().map_err(to_py)?;
    let data = if raw {
        AuxDataset::from_raw(inputs, targets, task)
    } else {
        AuxDataset::new(inputs, targets, task)
    }
    .map_err(to_py)?;
    let mut grid = HyperGrid::default();
    if let Some(v) = nu_grid {
        grid.nu_values = v;
    }
    if let Some(v) = lambda_grid {
        grid.lambda_values = v;
    }
    let model = core_pretrain::pretrain(&data, kernel.inner, &grid).map_err(to_py)?;
    Ok(PyAuxModel { inner: model })
}

fn covariance(kernel: &Bound<'_, PyAny>) -> PyResult<Arc<dyn Covariance>> {
    if let Ok(k) = kernel.cast::<PyTunedKernel>() {
        return Ok(k.borrow().inner.clone());
    }
    if let Ok(k) = kernel.cast::<PyFreeKernel>() {
        return Ok(Arc::new(k.borrow().inner));
    }
    Err(PyValueError::new_err("kernel must be a TunedKernel or FreeKernel"))
}

/// Zero-mean GP posterior.
#[pyclass(name = "GpPosterior", module = "tpbo")]
struct PyGp {
    inner: CoreGp,
}

#[pymethods]
impl PyGp {
    #[new]
    #[pyo3(signature = (kernel, noise_var=1e-6))]
    fn new(kernel: &Bound<'_, PyAny>, noise_var: f64) -> PyResult<Self> {
        Ok(PyGp { inner: CoreGp::new(covariance(kernel)?, noise_var).map_err(to_py)? })
    }

    fn add_observation(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.inner = self.inner.add_observation(x, y).map_err(to_py)?;
        Ok(())
    }

    /// `(mean, variance)` at `x`.
    fn posterior(&self, x: Vec<f64>) -> (f64, f64) {
        self.inner.posterior(&x)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Ask/tell optimization session over `[-1, 1]^dim`.
#[pyclass(name = "BoSession", module = "tpbo")]
struct PySession {
    inner: CoreSession,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (kernel, dim, acquisition="ei", delta=0.1, noise_var=1e-6, seed=0))]
    fn new(
        kernel: &Bound<'_, PyAny>,
        dim: usize,
        acquisition: &str,
        delta: f64,
        noise_var: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = AcquisitionSpec::new(acquisition.parse().map_err(to_py)?, delta, dim).map_err(to_py)?;
        let inner = CoreSession::new(covariance(kernel)?, spec, noise_var, seed).map_err(to_py)?;
        Ok(PySession { inner })
    }

    fn ask(&mut self) -> PyResult<Vec<f64>> {
        Ok(self.inner.ask().map_err(to_py)?.x)
    }

    fn tell(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.inner.tell(x, y).map_err(to_py)?;
        Ok(())
    }

    /// `(x, y)` of the best observation so far.
    fn best(&self) -> Option<(Vec<f64>, f64)> {
        self.inner.best().map(|(x, y)| (x.to_vec(), y))
    }

    #[getter]
    fn iteration(&self) -> usize {
        self.inner.iteration()
    }
}

/// Normalized value of a built-in test function at `x` in `[-1, 1]^2`.
#[pyfunction]
#[pyo3(signature = (name, x, grid_resolution=201))]
fn test_function(name: &str, x: Vec<f64>, grid_resolution: usize) -> PyResult<f64> {
    let f: TestFunction = name.parse().map_err(to_py)?;
    if x.len() != 2 {
        return Err(PyValueError::new_err("test functions take 2-D points"));
    }
    Ok(bench::normalize_problem(f, grid_resolution).eval(&x))
}

/// Runs the benchmark; returns `(method, function, seed, iteration, best_value)` rows.
#[pyfunction]
#[pyo3(signature = (functions, methods, seeds=10, iterations=40, base_seed=0))]
fn run_benchmark(
    py: Python<'_>,
    functions: Vec<String>,
    methods: Vec<String>,
    seeds: usize,
    iterations: usize,
    base_seed: u64,
) -> PyResult<Vec<(String, String, usize, usize, f64)>> {
    let functions = functions.iter().map(|s| s.parse()).collect::<Result<Vec<TestFunction>, _>>().map_err(to_py)?;
    let methods = methods.iter().map(|s| s.parse()).collect::<Result<Vec<Method>, _>>().map_err(to_py)?;
    let spec = BenchmarkSpec { functions, methods, seeds, iterations, base_seed, ..BenchmarkSpec::default() };
    let out = py.detach(|| bench::run_benchmark(&spec)).map_err(to_py)?;
    Ok(out
        .records
        .into_iter()
        .map(|r| (r.method.name().to_string(), r.function.name().to_string(), r.seed, r.iteration, r.best_value))
        .collect())
}

#[pymodule]
fn tpbo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFreeKernel>()?;
    m.add_class::<PyTunedKernel>()?;
    m.add_class::<PyAuxModel>()?;
    m.add_class::<PyGp>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(pretrain, m)?)?;
    m.add_function(wrap_pyfunction!(test_function, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add("VanishingKernelError", m.py().get_type::<VanishingKernelError>())?;
    Ok(())
}
