use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use msalab::discretization::PeriodicPotential;
use msalab::error::Error;
use msalab::experiments::{run_experiment as run, RunOptions};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Geometry(_) | Error::Scale(_) | Error::Grid(_) => {
            PyValueError::new_err(format!("{}: {e}", e.kind()))
        }
        _ => PyRuntimeError::new_err(format!("{}: {e}", e.kind())),
    }
}

/// `C₁ = exp ∫₀¹ (1 − e^{−t})/t dt`.
#[pyfunction]
fn carleman_constant() -> f64 {
    msalab::qucp::carleman_constant()
}

#[pyfunction]
fn hat_n(p: f64) -> PyResult<u32> {
    if !(p > 0.0) {
        return Err(PyValueError::new_err("p must be positive"));
    }
    Ok(msalab::msa::hat_n(p))
}

/// `(γ − 1, 1/(2γ))`, or `None` when empty.
#[pyfunction]
fn gamma_window(gamma: f64) -> Option<(f64, f64)> {
    msalab::msa::gamma_window(gamma)
}

/// Smallest eigenvalue of the compressed ball weight on the torus of side `l`.
#[pyfunction]
#[pyo3(signature = (amplitude, period, l, points_per_unit, window, delta))]
fn periodic_gap(
    amplitude: f64,
    period: u32,
    l: f64,
    points_per_unit: u32,
    window: (f64, f64),
    delta: f64,
) -> PyResult<Option<f64>> {
    let v = PeriodicPotential::Cosine { amplitude, period };
    let r = msalab::qucp::periodic_projection_gap(&v, 1, l, points_per_unit, window, delta, None).map_err(to_py)?;
    Ok(r.gap)
}

/// Runs an experiment config and returns the manifest as a JSON string.
#[pyfunction]
#[pyo3(signature = (config, out_dir, workers = 1, seed = None))]
fn run_experiment(py: Python<'_>, config: PathBuf, out_dir: PathBuf, workers: usize, seed: Option<u64>) -> PyResult<String> {
    let opts = RunOptions {
        out_dir,
        workers,
        seed_override: seed,
    };
    let manifest = py.detach(|| run(&config, &opts)).map_err(to_py)?;
    serde_json::to_string(&manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn msalab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(carleman_constant, m)?)?;
    m.add_function(wrap_pyfunction!(hat_n, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_window, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
