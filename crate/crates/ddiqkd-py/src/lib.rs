//! Python bindings for the ddiQKD simulator. Thin wrappers around the core
//! crate: states and adversaries are addressed by their string labels, and
//! structured results come back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use ddiqkd_core::analysis;
use ddiqkd_core::bell;
use ddiqkd_core::fock;
use ddiqkd_core::noise::{ChannelParams, DetectorParams, SourceParams};
use ddiqkd_core::protocol;
use ddiqkd_core::quantum::Bb84State;

fn parse_state(label: &str) -> PyResult<Bb84State> {
    Bb84State::ALL
        .into_iter()
        .find(|s| s.label() == label)
        .ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown state {label:?} (expected plus, minus, plus_i or minus_i)"
            ))
        })
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64().unwrap().into_pyobject(py)?.unbind().into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py_dict<T: ::serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

/// Bell-outcome probabilities [phi_plus, phi_minus, psi_plus, psi_minus]
/// for an Alice state label and Bob phase.
#[pyfunction]
fn bell_probabilities(alice: &str, phi: f64) -> PyResult<[f64; 4]> {
    Ok(bell::bell_probabilities(parse_state(alice)?, phi))
}

/// Bob's interferometer phase for a BB84 state label.
#[pyfunction]
fn phase_for(state: &str) -> PyResult<f64> {
    Ok(bell::phase_for(parse_state(state)?))
}

/// Asymptotic secret key fraction max(0, 1 - 2 h(Q)).
#[pyfunction]
fn secret_fraction(qber: f64) -> PyResult<f64> {
    protocol::secret_fraction(qber).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Binary entropy in bits.
#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    protocol::binary_entropy(p)
}

/// Runs a Monte-Carlo protocol session and returns the statistics as a dict.
///
/// adversary: "none", "intercept_resend" or "constant_remap".
#[pyfunction]
#[pyo3(signature = (
    rounds,
    seed,
    transmittance = 1.0,
    depolarization = 0.0,
    phase_misalignment = 0.0,
    efficiency = 1.0,
    dark_count = 0.0,
    mu = None,
    adversary = "none",
))]
#[allow(clippy::too_many_arguments)]
fn run_session(
    py: Python<'_>,
    rounds: u64,
    seed: u64,
    transmittance: f64,
    depolarization: f64,
    phase_misalignment: f64,
    efficiency: f64,
    dark_count: f64,
    mu: Option<f64>,
    adversary: &str,
) -> PyResult<Py<PyAny>> {
    let source = match mu {
        None => SourceParams::SinglePhoton,
        Some(mu) => SourceParams::Wcs { mu },
    };
    let channel = ChannelParams { transmittance, depolarization, phase_misalignment };
    let det = DetectorParams { efficiency, dark_count };
    let adversary = match adversary {
        "none" => protocol::AdversaryModel::None,
        "intercept_resend" => protocol::AdversaryModel::InterceptResend { probability: 1.0 },
        "constant_remap" => protocol::AdversaryModel::DetectorControl {
            remap: protocol::RemapTable::constant(bell::BsmOutcome::PhiPlus),
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown adversary {other:?} (expected none, intercept_resend or constant_remap)"
            )));
        }
    };
    let (stats, _) = protocol::run_session(rounds, &source, &channel, &det, &adversary, seed, false)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mi = protocol::mutual_information_bits(&stats.joint_counts);
    let result = to_py_dict(py, &stats)?;
    let dict = result.downcast_bound::<PyDict>(py)?;
    dict.set_item("mutual_information_bits", mi)?;
    Ok(result)
}

/// Phase scan for a fixed Alice state; returns phases, per-phase Bell
/// probabilities and the sinusoid fits (n_per_point = 0 is analytic).
#[pyfunction]
#[pyo3(signature = (alice, points = 24, n_per_point = 0, depolarization = 0.0, seed = 1))]
fn phase_scan(
    py: Python<'_>,
    alice: &str,
    points: usize,
    n_per_point: u64,
    depolarization: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let channel = ChannelParams { depolarization, ..ChannelParams::ideal() };
    let result = analysis::phase_scan(
        parse_state(alice)?,
        &analysis::phase_grid(points),
        n_per_point,
        &channel,
        &DetectorParams::ideal(),
        seed,
    )
    .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py_dict(py, &result)
}

/// Fock-sector security audit; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (sectors, family_size = 10, n_max = 4, seed = 1))]
fn fixed_state_audit(
    py: Python<'_>,
    sectors: Vec<usize>,
    family_size: usize,
    n_max: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let report = fock::fixed_state_audit(&sectors, family_size, n_max, seed)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py_dict(py, &report)
}

/// Asymptotic toy rate curves over a loss grid (dB); returns a list of dicts.
#[pyfunction]
#[pyo3(signature = (mu, eta_det, loss_grid_db, clock_hz = 1e9, qber = 0.015))]
fn rate_curves(
    py: Python<'_>,
    mu: f64,
    eta_det: f64,
    loss_grid_db: Vec<f64>,
    clock_hz: f64,
    qber: f64,
) -> PyResult<Py<PyAny>> {
    let curve = analysis::rate_curves(mu, eta_det, &loss_grid_db, clock_hz, qber)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py_dict(py, &curve)
}

#[pymodule]
fn ddiqkd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bell_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(phase_for, m)?)?;
    m.add_function(wrap_pyfunction!(secret_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(phase_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_state_audit, m)?)?;
    m.add_function(wrap_pyfunction!(rate_curves, m)?)?;
    m.add("STATES", ["plus", "minus", "plus_i", "minus_i"])?;
    m.add("BELL_OUTCOMES", ["phi_plus", "phi_minus", "psi_plus", "psi_minus"])?;
    Ok(())
}
