//! Python bindings: cases, robust parameters, planning runs, sweeps and the
//! line-rating physics.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use gridxpand::case::{self, CaseSystem};
use gridxpand::cli::{self, SweepSpec};
use gridxpand::dtlr;
use gridxpand::linearize::trig_segments;
use gridxpand::milp::{build_igtep, Mode};
use gridxpand::solve::{Backend, SolveConfig};
use gridxpand::uncertainty;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable value to plain Python objects through JSON.
fn to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(PyValueError::new_err)
}

fn solve_config(backend: &str, time_limit: f64, gap: f64) -> PyResult<SolveConfig> {
    let backend = match backend {
        "external" => Backend::External,
        "oracle" => Backend::Oracle,
        other => return Err(PyValueError::new_err(format!("unknown backend `{other}` (expected external or oracle)"))),
    };
    Ok(SolveConfig {
        backend,
        time_limit,
        mip_gap: gap,
        ..SolveConfig::default()
    })
}

#[pyclass(name = "Case", module = "gridxpand")]
#[derive(Clone)]
struct PyCase {
    inner: CaseSystem,
}

#[pymethods]
impl PyCase {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        case::load_case(&path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        case::parse_case(text, "<string>").map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_json(&self) -> String {
        case::case_to_json(&self.inner)
    }

    /// MW
    #[getter]
    fn peak_demand(&self) -> f64 {
        self.inner.peak_demand()
    }

    #[getter]
    fn buses(&self) -> Vec<String> {
        self.inner.buses.iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn lines(&self) -> Vec<String> {
        self.inner.lines.iter().map(|l| l.id.clone()).collect()
    }

    #[getter]
    fn candidate_lines(&self) -> Vec<String> {
        self.inner.lines.iter().filter(|l| l.candidate).map(|l| l.id.clone()).collect()
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.inner.generators.iter().map(|g| g.id.clone()).collect()
    }

    #[getter]
    fn candidate_generators(&self) -> Vec<String> {
        self.inner.generators.iter().filter(|g| g.candidate).map(|g| g.id.clone()).collect()
    }

    #[getter]
    fn periods(&self) -> Vec<String> {
        self.inner.periods.iter().map(|p| p.id.clone()).collect()
    }

    fn scale_to_peak(&self, peak: f64) -> PyResult<Self> {
        case::scale_to_peak(&self.inner, peak).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Net demand forecast at a bus in a period, MW.
    fn net_demand(&self, bus: &str, period: &str) -> PyResult<f64> {
        case::net_demand_forecast(&self.inner, bus, period).map_err(value_err)
    }

    /// Every violated rule, empty for a valid case.
    fn violations(&self) -> Vec<String> {
        case::validate_case(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Case({} buses, {} lines, {} generators, {} periods, peak {} MW)",
            self.inner.buses.len(),
            self.inner.lines.len(),
            self.inner.generators.len(),
            self.inner.periods.len(),
            self.inner.peak_demand()
        )
    }
}

#[pyclass(name = "RobustParams", module = "gridxpand", frozen)]
#[derive(Clone, Copy)]
struct PyRobustParams {
    inner: uncertainty::RobustParams,
}

#[pymethods]
impl PyRobustParams {
    #[new]
    #[pyo3(signature = (phi = 0.05, mu = 0.01, reliability = 0.05))]
    fn new(phi: f64, mu: f64, reliability: f64) -> PyResult<Self> {
        uncertainty::RobustParams::new(phi, mu, reliability)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn deterministic() -> Self {
        Self {
            inner: uncertainty::RobustParams::deterministic(),
        }
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn reliability(&self) -> f64 {
        self.inner.reliability()
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    fn __repr__(&self) -> String {
        format!(
            "RobustParams(phi={}, mu={}, reliability={}, omega={:.6})",
            self.phi(),
            self.mu(),
            self.reliability(),
            self.omega()
        )
    }
}

fn params_or_default(params: Option<PyRobustParams>) -> uncertainty::RobustParams {
    params.map_or_else(uncertainty::RobustParams::default, |p| p.inner)
}

/// Loads a case and an optional scenario file, returning both.
#[pyfunction]
#[pyo3(signature = (case, scenario = None))]
fn load_inputs(case: PathBuf, scenario: Option<PathBuf>) -> PyResult<(PyCase, PyRobustParams)> {
    let (c, p) = cli::load_inputs(&case, scenario.as_deref()).map_err(value_err)?;
    Ok((PyCase { inner: c }, PyRobustParams { inner: p }))
}

/// Size of the MILP built for a mode.
#[pyfunction]
#[pyo3(signature = (case, mode = "dc_det", params = None))]
fn model_summary(py: Python<'_>, case: &PyCase, mode: &str, params: Option<PyRobustParams>) -> PyResult<PyObject> {
    let (m, _) = build_igtep(&case.inner, &params_or_default(params), parse_mode(mode)?).map_err(value_err)?;
    #[derive(Serialize)]
    struct Summary {
        variables: usize,
        binaries: usize,
        free_binaries: usize,
        constraints: usize,
        big_m: usize,
    }
    to_py(
        py,
        &Summary {
            variables: m.num_vars(),
            binaries: m.num_binaries(),
            free_binaries: m.free_binaries().len(),
            constraints: m.constraints.len(),
            big_m: m.metadata.big_m.len(),
        },
    )
}

/// The model in CPLEX LP format.
#[pyfunction]
#[pyo3(signature = (case, mode = "dc_det", params = None))]
fn lp_string(case: &PyCase, mode: &str, params: Option<PyRobustParams>) -> PyResult<String> {
    let (m, _) = build_igtep(&case.inner, &params_or_default(params), parse_mode(mode)?).map_err(value_err)?;
    Ok(m.to_lp_string())
}

/// Solves one planning problem; returns the plan and, in the thermal mode,
/// the heat-balance audit as a dict.
#[pyfunction]
#[pyo3(signature = (case, mode = "dc_det", params = None, backend = "external", time_limit = 600.0, gap = 1e-6))]
fn plan(
    py: Python<'_>,
    case: &PyCase,
    mode: &str,
    params: Option<PyRobustParams>,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<PyObject> {
    let mode = parse_mode(mode)?;
    let cfg = solve_config(backend, time_limit, gap)?;
    let params = params_or_default(params);
    let run = py
        .allow_threads(|| cli::run_plan(&case.inner, &params, mode, &cfg))
        .map_err(value_err)?;
    to_py(py, &run)
}

/// Solves every (peak, mode) pair; failures are recorded per row.
#[pyfunction]
#[pyo3(signature = (case, peaks, modes = vec!["dc_det".to_string()], params = None, backend = "external", time_limit = 600.0, gap = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    case: &PyCase,
    peaks: Vec<f64>,
    modes: Vec<String>,
    params: Option<PyRobustParams>,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<PyObject> {
    let spec = SweepSpec {
        peaks,
        modes: modes.iter().map(|m| parse_mode(m)).collect::<PyResult<_>>()?,
        out: None,
    };
    let cfg = solve_config(backend, time_limit, gap)?;
    let params = params_or_default(params);
    let report = py
        .allow_threads(|| cli::run_sweep(&case.inner, &params, &spec, &cfg))
        .map_err(value_err)?;
    to_py(py, &report)
}

fn line_and_weather(case: &PyCase, line: &str, period: &str) -> PyResult<(usize, dtlr::WeatherRecord)> {
    let c = &case.inner;
    let ci = c.line_index(line).ok_or_else(|| PyKeyError::new_err(format!("unknown line `{line}`")))?;
    let d = c.period_index(period).ok_or_else(|| PyKeyError::new_err(format!("unknown period `{period}`")))?;
    let w = c
        .weather(ci, d)
        .ok_or_else(|| PyValueError::new_err(format!("no weather for line `{line}` in period `{period}`")))?;
    Ok((ci, w))
}

/// Largest current (A) keeping the line at or below its maximum temperature.
#[pyfunction]
fn ampacity(case: &PyCase, line: &str, period: &str) -> PyResult<f64> {
    let (ci, w) = line_and_weather(case, line, period)?;
    let l = &case.inner.lines[ci];
    dtlr::ampacity(l.t_max, &w, &l.conductor, l.resistance_per_m()).map_err(value_err)
}

/// Conductor temperature (K) at which a current (A) is in heat balance.
#[pyfunction]
fn steady_state_temperature(case: &PyCase, line: &str, period: &str, amps: f64) -> PyResult<f64> {
    let (ci, w) = line_and_weather(case, line, period)?;
    let l = &case.inner.lines[ci];
    dtlr::steady_state_temperature(amps, &w, &l.conductor, l.resistance_per_m()).map_err(value_err)
}

#[pyfunction]
fn reynolds(diameter: f64, wind_speed: f64, air_density: f64, air_viscosity: f64) -> PyResult<f64> {
    dtlr::reynolds(diameter, wind_speed, air_density, air_viscosity).map_err(value_err)
}

/// W/m
#[pyfunction]
fn radiation_loss(emissivity: f64, kr: f64, t: f64, ambient: f64) -> f64 {
    dtlr::radiation_loss(emissivity, kr, t, ambient)
}

/// Trig segments with their error certificates.
#[pyfunction]
fn trig_fits(py: Python<'_>) -> PyResult<PyObject> {
    to_py(py, &trig_segments())
}

/// Logarithmic radiation link with its certificates.
#[pyfunction]
#[pyo3(signature = (emissivity = 0.75, kr = 2.5e-9, ambient = 298.0))]
fn radiation_fit(py: Python<'_>, emissivity: f64, kr: f64, ambient: f64) -> PyResult<PyObject> {
    let fit = dtlr::radiation_ln_fit(emissivity, kr, ambient, dtlr::RADIATION_FIT_RANGE).map_err(value_err)?;
    to_py(py, &fit)
}

#[pyfunction]
fn omega_from_reliability(reliability: f64) -> PyResult<f64> {
    uncertainty::omega_from_reliability(reliability).map_err(value_err)
}

#[pyfunction]
fn binomial_pmf(n: u64, x: u64, rho: f64) -> PyResult<f64> {
    uncertainty::binomial_pmf(n, x, rho).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "gridxpand")]
fn gridxpand_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCase>()?;
    m.add_class::<PyRobustParams>()?;
    m.add("MODES", Mode::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>())?;
    for f in [
        wrap_pyfunction!(load_inputs, m)?,
        wrap_pyfunction!(model_summary, m)?,
        wrap_pyfunction!(lp_string, m)?,
        wrap_pyfunction!(plan, m)?,
        wrap_pyfunction!(sweep, m)?,
        wrap_pyfunction!(ampacity, m)?,
        wrap_pyfunction!(steady_state_temperature, m)?,
        wrap_pyfunction!(reynolds, m)?,
        wrap_pyfunction!(radiation_loss, m)?,
        wrap_pyfunction!(trig_fits, m)?,
        wrap_pyfunction!(radiation_fit, m)?,
        wrap_pyfunction!(omega_from_reliability, m)?,
        wrap_pyfunction!(binomial_pmf, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
