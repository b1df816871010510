//! Python bindings: special functions, kernels, sources and the three
//! solution engines. Long computations release the GIL.

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fracflow::curve::SolutionCurve;
use fracflow::kernels::{kernel_multi_term_const, kernel_stable, JumpKernel};
use fracflow::paths::exit_time_density_stable;
use fracflow::solve_mc::{self, LinearProblem, McConfig};
use fracflow::solve_quad;
use fracflow::source::Source as CoreSource;
use fracflow::special::{self, StableParams};
use fracflow::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config { .. } => PyValueError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn params(beta: f64) -> PyResult<StableParams> {
    StableParams::new(beta).map_err(to_py)
}

#[pyfunction]
fn gamma(x: f64) -> f64 {
    special::gamma(x)
}

#[pyfunction]
#[pyo3(signature = (alpha, z, beta = 1.0))]
fn mittag_leffler(alpha: f64, z: f64, beta: f64) -> PyResult<f64> {
    special::mittag_leffler2(alpha, beta, z).map_err(to_py)
}

#[pyfunction]
fn stable_density(beta: f64, x: f64) -> PyResult<f64> {
    special::try_stable_density(params(beta)?, x).map_err(to_py)
}

#[pyfunction]
fn stable_cdf(beta: f64, x: f64) -> PyResult<f64> {
    special::try_stable_cdf(params(beta)?, x).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (beta, s, t = 1.0, a = 0.0))]
fn exit_time_density(beta: f64, s: f64, t: f64, a: f64) -> PyResult<f64> {
    exit_time_density_stable(beta, t, a, s).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (beta, lam, t = 1.0, a = 0.0))]
fn laplace_exit(beta: f64, lam: f64, t: f64, a: f64) -> PyResult<f64> {
    solve_quad::laplace_exit_quad(beta, lam, t, a).map_err(to_py)
}

/// Jump kernel ν(t, r) of the generalized operators.
#[pyclass(frozen)]
struct Kernel {
    inner: JumpKernel,
}

#[pymethods]
impl Kernel {
    #[staticmethod]
    fn stable(beta: f64) -> PyResult<Self> {
        Ok(Kernel { inner: kernel_stable(beta).map_err(to_py)? })
    }

    /// Σ w_j β_j/(Γ(1−β_j) r^{1+β_j}) with constant weights.
    #[staticmethod]
    fn multi_term(weights: Vec<f64>, betas: Vec<f64>) -> PyResult<Self> {
        Ok(Kernel { inner: kernel_multi_term_const(&weights, &betas).map_err(to_py)? })
    }

    fn nu(&self, t: f64, r: f64) -> f64 {
        self.inner.nu(t, r)
    }

    fn tail_mass(&self, t: f64, x: f64) -> f64 {
        self.inner.tail_mass(t, x)
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.inner.label())
    }
}

/// Bounded source term g.
#[pyclass(frozen)]
struct Source {
    inner: CoreSource,
}

#[pymethods]
impl Source {
    #[staticmethod]
    fn constant(c: f64) -> Self {
        Source { inner: CoreSource::constant(c) }
    }

    #[staticmethod]
    fn poly(coeffs: Vec<f64>) -> Self {
        Source { inner: CoreSource::poly(&coeffs) }
    }

    #[staticmethod]
    #[pyo3(signature = (a = 1.0))]
    fn sin(a: f64) -> Self {
        Source { inner: CoreSource::sin(a) }
    }

    #[staticmethod]
    #[pyo3(signature = (a = 1.0))]
    fn exp(a: f64) -> Self {
        Source { inner: CoreSource::exp(a) }
    }

    #[staticmethod]
    fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Source { inner: CoreSource::piecewise(&breakpoints, &values).map_err(to_py)? })
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn __repr__(&self) -> String {
        format!("Source({})", self.inner.label())
    }
}

/// Solution values on a grid; MC curves carry standard errors.
#[pyclass(frozen, get_all)]
struct Curve {
    method: String,
    t: Vec<f64>,
    values: Vec<f64>,
    std_errors: Vec<f64>,
}

impl From<SolutionCurve> for Curve {
    fn from(c: SolutionCurve) -> Self {
        Curve {
            t: c.points.iter().map(|p| p.t).collect(),
            values: c.values(),
            std_errors: c.points.iter().map(|p| p.std_error).collect(),
            method: c.method,
        }
    }
}

#[pymethods]
impl Curve {
    fn __len__(&self) -> usize {
        self.t.len()
    }

    fn __repr__(&self) -> String {
        format!("Curve(method={}, points={})", self.method, self.t.len())
    }
}

#[derive(Clone, Copy)]
enum Flavour {
    Caputo,
    Rl,
}

#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    flavour: Flavour,
    kernel: &Kernel,
    lam: f64,
    g: &Source,
    u_a: f64,
    grid: Vec<f64>,
    method: &str,
    a: f64,
    b: f64,
    n_paths: u64,
    ds: f64,
    seed: u64,
) -> PyResult<Curve> {
    let beta = kernel.inner.stable_beta();
    let need_stable = || beta.ok_or_else(|| PyValueError::new_err(format!("method {method} needs a stable kernel")));
    let (k, gs) = (kernel.inner.clone(), g.inner.clone());
    let out = match method {
        "mc" => py.detach(move || {
            let p = LinearProblem { kernel: k, lambda: lam, g: gs, u_a, a, b };
            let cfg = McConfig { n_paths, ds, master_seed: seed, ..McConfig::default() };
            match flavour {
                Flavour::Caputo => solve_mc::solve_caputo_mc(&p, &grid, &cfg),
                Flavour::Rl => solve_mc::solve_rl_mc(&p, &grid, &cfg),
            }
        }),
        "quad" => {
            let beta = need_stable()?;
            py.detach(move || match flavour {
                Flavour::Caputo => solve_quad::solve_caputo_quad(beta, lam, &gs, u_a, a, &grid),
                Flavour::Rl => solve_quad::solve_rl_quad(beta, lam, &gs, a, &grid),
            })
        }
        "closed_form" => {
            let beta = need_stable()?;
            py.detach(move || solve_quad::solve_caputo_closed_form(beta, lam, &gs, u_a, a, &grid))
        }
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    Ok(out.map_err(to_py)?.into())
}

/// D*u = −λu + g on (a, b], u(a) = u_a.
#[pyfunction]
#[pyo3(signature = (kernel, lam, g, u_a, grid, method = "mc", a = 0.0, b = None, n_paths = 100_000, ds = 2e-3, seed = 20_240_917))]
#[allow(clippy::too_many_arguments)]
fn solve_caputo(
    py: Python<'_>,
    kernel: &Kernel,
    lam: f64,
    g: &Source,
    u_a: f64,
    grid: Vec<f64>,
    method: &str,
    a: f64,
    b: Option<f64>,
    n_paths: u64,
    ds: f64,
    seed: u64,
) -> PyResult<Curve> {
    let b = b.unwrap_or_else(|| grid.iter().copied().fold(a, f64::max));
    solve(py, Flavour::Caputo, kernel, lam, g, u_a, grid, method, a, b, n_paths, ds, seed)
}

/// Dw = −λw + g on (a, b], w(a) = 0.
#[pyfunction]
#[pyo3(signature = (kernel, lam, g, grid, method = "mc", a = 0.0, b = None, n_paths = 100_000, ds = 2e-3, seed = 20_240_917))]
#[allow(clippy::too_many_arguments)]
fn solve_rl(
    py: Python<'_>,
    kernel: &Kernel,
    lam: f64,
    g: &Source,
    grid: Vec<f64>,
    method: &str,
    a: f64,
    b: Option<f64>,
    n_paths: u64,
    ds: f64,
    seed: u64,
) -> PyResult<Curve> {
    let b = b.unwrap_or_else(|| grid.iter().copied().fold(a, f64::max));
    if method == "closed_form" && kernel.inner.stable_beta().is_some() {
        // with zero boundary value the two problems share the closed form
        return solve(py, Flavour::Caputo, kernel, lam, g, 0.0, grid, method, a, b, n_paths, ds, seed);
    }
    solve(py, Flavour::Rl, kernel, lam, g, 0.0, grid, method, a, b, n_paths, ds, seed)
}

#[pymodule(name = "fracflow")]
fn fracflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(stable_density, m)?)?;
    m.add_function(wrap_pyfunction!(stable_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(exit_time_density, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_exit, m)?)?;
    m.add_function(wrap_pyfunction!(solve_caputo, m)?)?;
    m.add_function(wrap_pyfunction!(solve_rl, m)?)?;
    m.add_class::<Kernel>()?;
    m.add_class::<Source>()?;
    m.add_class::<Curve>()?;
    Ok(())
}
