//! Python bindings for the `spinamp` crate.
//!
//! Frequencies cross the boundary in MHz (ν = ω/2π) and times in µs.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spinamp::dynamics::{omega_max, readout_gain as gain_of, TimeGrid, Trajectory};
use spinamp::experiments::{self, Experiment, RunConfig, RunOutput};
use spinamp::hilbert::QubitState;
use spinamp::model::{self, DriveChoice};
use spinamp::oracle::EnsembleSampler;
use spinamp::rk4::required_steps;
use spinamp::{analytic, angular_to_mhz, mhz_to_angular};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SystemParams", frozen, skip_from_py_object, module = "spinamp_py")]
#[derive(Clone, Copy)]
struct PySystemParams {
    inner: model::SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// All frequencies in MHz. `drive_mhz=None` selects the matched drive.
    #[new]
    #[pyo3(signature = (
        omega_t_mhz = 412.5,
        omega_bar_mhz = 0.0,
        g_mhz = 75.0,
        lambda_d_mhz = 40.0,
        gamma_mhz = 12.5,
        gamma_s_mhz = 0.0,
        drive_mhz = None,
    ))]
    fn new(
        omega_t_mhz: f64,
        omega_bar_mhz: f64,
        g_mhz: f64,
        lambda_d_mhz: f64,
        gamma_mhz: f64,
        gamma_s_mhz: f64,
        drive_mhz: Option<f64>,
    ) -> PyResult<Self> {
        let drive = drive_mhz.map_or(DriveChoice::Matched, DriveChoice::Explicit);
        let inner = model::SystemParams::from_mhz(
            omega_t_mhz,
            omega_bar_mhz,
            drive,
            g_mhz,
            lambda_d_mhz,
            gamma_mhz,
            gamma_s_mhz,
        )
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_t_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.omega_t)
    }

    #[getter]
    fn omega_bar_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.omega_bar)
    }

    #[getter]
    fn drive_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.omega_d)
    }

    #[getter]
    fn g_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.g_collective)
    }

    #[getter]
    fn lambda_d_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.lambda_d)
    }

    #[getter]
    fn gamma_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.gamma)
    }

    #[getter]
    fn gamma_s_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.gamma_s)
    }

    #[getter]
    fn delta_mhz(&self) -> f64 {
        angular_to_mhz(self.inner.delta())
    }

    fn with_gamma(&self, gamma_mhz: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(mhz_to_angular(gamma_mhz));
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    fn with_lambda_d(&self, lambda_d_mhz: f64) -> PyResult<Self> {
        let inner = self.inner.with_lambda_d(mhz_to_angular(lambda_d_mhz));
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemParams(omega_t_mhz={}, omega_bar_mhz={}, g_mhz={}, lambda_d_mhz={}, gamma_mhz={}, gamma_s_mhz={}, drive_mhz={})",
            self.omega_t_mhz(),
            self.omega_bar_mhz(),
            self.g_mhz(),
            self.lambda_d_mhz(),
            self.gamma_mhz(),
            self.gamma_s_mhz(),
            self.drive_mhz()
        )
    }
}

#[pyfunction]
fn excited_population(t_us: f64, p: &PySystemParams) -> f64 {
    analytic::excited_population(t_us, &p.inner)
}

#[pyfunction]
fn ground_population(t_us: f64, p: &PySystemParams) -> f64 {
    analytic::ground_population(t_us, &p.inner)
}

#[pyfunction]
fn excited_steady_state(p: &PySystemParams) -> f64 {
    analytic::excited_steady_state(&p.inner)
}

#[pyfunction]
fn ground_mean(p: &PySystemParams) -> f64 {
    analytic::ground_mean(&p.inner)
}

/// Effective drive on the collective mode, in MHz.
#[pyfunction]
fn lambda_eff_mhz(p: &PySystemParams) -> PyResult<f64> {
    analytic::lambda_eff(&p.inner).map(angular_to_mhz).map_err(value_err)
}

/// `(omega_plus_mhz, omega_minus_mhz, phi_n)` of the doublet above `n`.
#[pyfunction]
fn jc_spectrum(n: usize, p: &PySystemParams) -> (f64, f64, f64) {
    let l = analytic::jc_spectrum(n, &p.inner);
    (angular_to_mhz(l.omega_plus), angular_to_mhz(l.omega_minus), l.phi_n)
}

fn qubit(label: &str) -> PyResult<QubitState> {
    match label {
        "e" | "excited" => Ok(QubitState::Excited),
        "g" | "ground" => Ok(QubitState::Ground),
        other => Err(value_err(format!("qubit state must be 'e' or 'g', got '{other}'"))),
    }
}

fn grid_for(p: &model::SystemParams, cutoff: usize, t_end_us: f64, records: usize, refine: usize) -> PyResult<TimeGrid> {
    let h = model::build_driven(p, cutoff).map_err(value_err)?;
    let c = model::collapse_ops(p, cutoff).map_err(value_err)?;
    let steps = refine.max(1) * required_steps(omega_max(&h, &c), t_end_us);
    TimeGrid::with_records(0.0, t_end_us, records, steps.div_ceil(records.max(1))).map_err(value_err)
}

fn trajectory_dict(t: Trajectory) -> HashMap<&'static str, Vec<f64>> {
    HashMap::from([
        ("t_us", t.times),
        ("collective_n", t.collective_n),
        ("qubit_excited", t.qubit_excited),
        ("subradiant_n", t.subradiant_n),
        ("total_n", t.total_n),
    ])
}

/// Driven reduced model from |q, 0⟩; returns named time series.
#[pyfunction]
#[pyo3(signature = (p, qubit_state, cutoff = 8, t_end_us = 0.5, records = 500, step_refinement = 6))]
fn simulate_branch(
    py: Python<'_>,
    p: &PySystemParams,
    qubit_state: &str,
    cutoff: usize,
    t_end_us: f64,
    records: usize,
    step_refinement: usize,
) -> PyResult<HashMap<&'static str, Vec<f64>>> {
    let q = qubit(qubit_state)?;
    let params = p.inner;
    let grid = grid_for(&params, cutoff, t_end_us, records, step_refinement)?;
    let t = py
        .detach(|| experiments::simulate_branch(&params, cutoff, &grid, q))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(trajectory_dict(t))
}

/// `(t_us, gain)` with gain = total excitations(e) − total excitations(g).
#[pyfunction]
#[pyo3(signature = (p, cutoff = 8, t_end_us = 1.0, records = 500, step_refinement = 6))]
fn readout_gain(
    py: Python<'_>,
    p: &PySystemParams,
    cutoff: usize,
    t_end_us: f64,
    records: usize,
    step_refinement: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let params = p.inner;
    let grid = grid_for(&params, cutoff, t_end_us, records, step_refinement)?;
    py.detach(|| {
        let e = experiments::simulate_branch(&params, cutoff, &grid, QubitState::Excited)?;
        let g = experiments::simulate_branch(&params, cutoff, &grid, QubitState::Ground)?;
        let gain = gain_of(&e, &g)?;
        Ok::<_, spinamp::Error>((e.times, gain))
    })
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Seeded Lorentzian ensemble: `(freqs_mhz, couplings_mhz)`.
#[pyfunction]
#[pyo3(signature = (n, omega_bar_mhz, gamma_mhz, g_mhz, seed, truncation_k = 50.0))]
fn sample_ensemble(
    n: usize,
    omega_bar_mhz: f64,
    gamma_mhz: f64,
    g_mhz: f64,
    seed: u64,
    truncation_k: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = EnsembleSampler::new(
        n,
        mhz_to_angular(omega_bar_mhz),
        mhz_to_angular(gamma_mhz),
        mhz_to_angular(g_mhz),
    )
    .truncation(truncation_k)
    .sample(seed)
    .map_err(value_err)?;
    let to_mhz = |v: Vec<f64>| v.into_iter().map(angular_to_mhz).collect();
    Ok((to_mhz(s.freqs), to_mhz(s.couplings)))
}

/// Runs a named experiment with dot-path overrides; returns `(header, rows)`.
#[pyfunction]
#[pyo3(signature = (name, overrides = Vec::new()))]
fn run_experiment(py: Python<'_>, name: &str, overrides: Vec<String>) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let experiment: Experiment = name.parse().map_err(value_err)?;
    let cfg = RunConfig::from_overrides(&overrides).map_err(value_err)?;
    let (out, _) = py
        .detach(|| experiments::run_experiment(&cfg, experiment))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    match out {
        RunOutput::Table(t) => {
            let rows = t.rows.iter().map(|r| r.iter().map(|c| c.as_f64()).collect()).collect();
            Ok((t.header, rows))
        }
        RunOutput::Report(r) => {
            let header = vec!["passed".into(), "measured".into(), "tolerance".into()];
            let rows = r
                .checks
                .iter()
                .map(|c| vec![f64::from(u8::from(c.passed)), c.measured, c.tolerance])
                .collect();
            Ok((header, rows))
        }
    }
}

#[pymodule]
fn spinamp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_function(wrap_pyfunction!(excited_population, m)?)?;
    m.add_function(wrap_pyfunction!(ground_population, m)?)?;
    m.add_function(wrap_pyfunction!(excited_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(ground_mean, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_eff_mhz, m)?)?;
    m.add_function(wrap_pyfunction!(jc_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_branch, m)?)?;
    m.add_function(wrap_pyfunction!(readout_gain, m)?)?;
    m.add_function(wrap_pyfunction!(sample_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
