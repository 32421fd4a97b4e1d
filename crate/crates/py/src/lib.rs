//! Thin Python bindings: every function takes and returns JSON strings, so
//! the Python side works with plain dicts after `json.loads` and the solver
//! crate stays the single source of truth for report shapes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use comec::system_model::SystemParams;

fn err(e: comec::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn scenario(text: &str) -> PyResult<SystemParams> {
    SystemParams::from_json(text).map_err(err)
}

/// Minimize weighted energy; returns the solve report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario_json, alpha_grid = 201))]
fn solve_p1(scenario_json: &str, alpha_grid: usize) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::energy_min::solve_p1(&p, alpha_grid).map_err(err)?)
}

/// Maximize weighted offloaded data; returns the solve report as JSON.
#[pyfunction]
fn solve_p2(scenario_json: &str) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::data_max::solve_p2(&p).map_err(err)?)
}

/// High-SNR variant of the throughput solver.
#[pyfunction]
fn solve_p2_high_snr(scenario_json: &str) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::data_max::solve_p2_high_snr(&p).map_err(err)?)
}

/// TDMA benchmark for the energy problem.
#[pyfunction]
#[pyo3(signature = (scenario_json, alpha_grid = 201))]
fn tdma_energy_min(scenario_json: &str, alpha_grid: usize) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::baselines::tdma_energy_min(&p, alpha_grid).map_err(err)?)
}

/// TDMA benchmark for the throughput problem.
#[pyfunction]
fn tdma_data_max(scenario_json: &str) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::baselines::tdma_data_max(&p).map_err(err)?)
}

/// One-slot NOMA benchmark for the energy problem.
#[pyfunction]
fn noma_energy_min(scenario_json: &str) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::baselines::noma_energy_min(&p).map_err(err)?)
}

/// One-slot NOMA benchmark for the throughput problem.
#[pyfunction]
fn noma_data_max(scenario_json: &str) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    to_json(&comec::baselines::noma_data_max(&p).map_err(err)?)
}

/// Brute-force mesh reference for the energy problem.
#[pyfunction]
#[pyo3(signature = (scenario_json, points_per_axis = None, alpha_points = None))]
fn oracle_p1(
    scenario_json: &str,
    points_per_axis: Option<usize>,
    alpha_points: Option<usize>,
) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    let mut mesh = comec::oracle::MeshSpec::p1_default();
    if let Some(k) = points_per_axis {
        mesh.points_per_axis = k;
    }
    if let Some(k) = alpha_points {
        mesh.alpha_points = k;
    }
    to_json(&comec::oracle::oracle_p1(&p, &mesh).map_err(err)?)
}

/// Brute-force mesh reference for the throughput problem.
#[pyfunction]
#[pyo3(signature = (scenario_json, points_per_axis = None))]
fn oracle_p2(scenario_json: &str, points_per_axis: Option<usize>) -> PyResult<String> {
    let p = scenario(scenario_json)?;
    let mut mesh = comec::oracle::MeshSpec::p2_default();
    if let Some(k) = points_per_axis {
        mesh.points_per_axis = k;
    }
    to_json(&comec::oracle::oracle_p2(&p, &mesh).map_err(err)?)
}

/// Run a registered figure sweep; returns `(result_json, csv_text)`.
#[pyfunction]
fn run_sweep(config_json: &str) -> PyResult<(String, String)> {
    let cfg = comec::simharness::SweepConfig::from_json(config_json).map_err(err)?;
    let res = comec::simharness::run_sweep(&cfg).map_err(err)?;
    Ok((to_json(&res)?, res.to_csv()))
}

/// Reference scenario as JSON.
#[pyfunction]
fn default_scenario() -> String {
    comec::simharness::default_scenario().to_json()
}

/// Reference scenario with seeded fading as JSON.
#[pyfunction]
fn random_scenario(seed: u64) -> String {
    comec::simharness::random_scenario(seed).to_json()
}

/// Registered sweep figure ids.
#[pyfunction]
fn figure_ids() -> Vec<String> {
    comec::simharness::figure_registry().iter().map(|f| f.id.to_string()).collect()
}

#[pymodule]
fn comec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_p1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_p2, m)?)?;
    m.add_function(wrap_pyfunction!(solve_p2_high_snr, m)?)?;
    m.add_function(wrap_pyfunction!(tdma_energy_min, m)?)?;
    m.add_function(wrap_pyfunction!(tdma_data_max, m)?)?;
    m.add_function(wrap_pyfunction!(noma_energy_min, m)?)?;
    m.add_function(wrap_pyfunction!(noma_data_max, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_p1, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_p2, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(default_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(random_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(figure_ids, m)?)?;
    Ok(())
}
