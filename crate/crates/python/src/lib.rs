//! Python bindings for `onebit_sprt`.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use onebit_sprt::analysis;
use onebit_sprt::array_model::{self, db_to_amplitude, BinarySnapshot, CorrelationMatrix, ScenarioConfig};
use onebit_sprt::binary_model;
use onebit_sprt::montecarlo::{self, ExperimentSpec, Receiver, Truth};
use onebit_sprt::sprt;

fn to_py(e: onebit_sprt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Detection scenario. Angles in degrees, SNRs in dB (power).
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (sensors, zeta_deg=15.0, snr0_db=-24.0, snr1_db=-18.0, alpha=1e-3, bandwidth_hz=2.046e6, seed=1, max_steps=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        sensors: usize,
        zeta_deg: f64,
        snr0_db: f64,
        snr1_db: f64,
        alpha: f64,
        bandwidth_hz: f64,
        seed: u64,
        max_steps: Option<u64>,
    ) -> PyResult<Self> {
        let inner = ScenarioConfig {
            sensors,
            zeta: zeta_deg.to_radians(),
            gamma0: db_to_amplitude(snr0_db),
            gamma1: db_to_amplitude(snr1_db),
            alpha1: alpha,
            alpha2: alpha,
            bandwidth_hz,
            seed,
            max_steps,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn sensors(&self) -> usize {
        self.inner.sensors
    }

    #[getter]
    fn gamma0(&self) -> f64 {
        self.inner.gamma0
    }

    #[getter]
    fn gamma1(&self) -> f64 {
        self.inner.gamma1
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.inner.zeta
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(sensors={}, zeta={:.6} rad, gamma0={:.6}, gamma1={:.6}, alpha=({}, {}))",
            self.inner.sensors,
            self.inner.zeta,
            self.inner.gamma0,
            self.inner.gamma1,
            self.inner.alpha1,
            self.inner.alpha2
        )
    }
}

/// Replacement-model weights of the approximate 1-bit LLR.
#[pyclass(name = "BinaryModel")]
struct PyBinaryModel {
    inner: binary_model::BinaryModel,
}

#[pymethods]
impl PyBinaryModel {
    #[new]
    fn new(scenario: &PyScenario) -> PyResult<Self> {
        Ok(Self {
            inner: binary_model::BinaryModel::build(&scenario.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.weights.b.iter().copied().collect()
    }

    #[getter]
    fn mu_tilde(&self) -> Vec<f64> {
        self.inner.weights.mu_tilde.iter().copied().collect()
    }

    #[getter]
    fn pairs(&self) -> Vec<(usize, usize)> {
        self.inner.map.pairs().to_vec()
    }

    /// `(E_0[l̃], E_1[l̃])`.
    fn expected_llr(&self) -> (f64, f64) {
        self.inner.expected_llr_pair()
    }

    /// Approximate LLR of one ±1 sign vector.
    fn approx_llr(&self, z: Vec<i8>) -> PyResult<f64> {
        let z = BinarySnapshot::from_signs(z).map_err(to_py)?;
        binary_model::approx_llr(&z, &self.inner.weights, &self.inner.map).map_err(to_py)
    }

    fn moments(&self, hypothesis: u8) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let m = match hypothesis {
            0 => &self.inner.h0,
            1 => &self.inner.h1,
            _ => return Err(PyValueError::new_err("hypothesis must be 0 or 1")),
        };
        Ok((m.mu.iter().copied().collect(), rows(&m.cov)))
    }
}

#[pyfunction]
fn build_steering(sensors: usize, zeta: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(
        array_model::build_steering(sensors, zeta).map_err(to_py)?.matrix(),
    ))
}

#[pyfunction]
fn build_covariance(sensors: usize, zeta: f64, gamma: f64) -> PyResult<Vec<Vec<f64>>> {
    let a = array_model::build_steering(sensors, zeta).map_err(to_py)?;
    Ok(rows(array_model::build_covariance(&a, gamma).matrix()))
}

#[pyfunction]
fn orthant4(sigma: Vec<Vec<f64>>) -> PyResult<f64> {
    let c = CorrelationMatrix::new(from_rows(sigma)?).map_err(to_py)?;
    binary_model::orthant4(&c).map_err(to_py)
}

#[pyfunction]
fn quad_moment(sigma: Vec<Vec<f64>>) -> PyResult<f64> {
    let c = CorrelationMatrix::new(from_rows(sigma)?).map_err(to_py)?;
    binary_model::quad_moment(&c).map_err(to_py)
}

#[pyfunction]
fn thresholds(alpha1: f64, alpha2: f64) -> PyResult<(f64, f64)> {
    let t = sprt::thresholds(alpha1, alpha2).map_err(to_py)?;
    Ok((t.lower, t.upper))
}

#[pyfunction]
fn asn(mean_h0: f64, mean_h1: f64, alpha1: f64, alpha2: f64) -> PyResult<(f64, f64)> {
    sprt::asn(mean_h0, mean_h1, alpha1, alpha2).map_err(to_py)
}

#[pyfunction]
fn efficiency(asn_ideal: f64, asn_onebit: f64) -> PyResult<f64> {
    sprt::efficiency(asn_ideal, asn_onebit).map_err(to_py)
}

/// Runs Wald's test over a finite list of LLR increments.
#[pyfunction]
#[pyo3(signature = (increments, alpha1, alpha2, max_steps=None))]
fn run_sprt(increments: Vec<f64>, alpha1: f64, alpha2: f64, max_steps: Option<u64>) -> PyResult<(String, u64, f64)> {
    let th = sprt::thresholds(alpha1, alpha2).map_err(to_py)?;
    let cap = max_steps.unwrap_or(increments.len() as u64);
    let out = sprt::run_sprt(increments, th, cap);
    Ok((format!("{:?}", out.decision), out.stop_step, out.final_llr))
}

/// Analytic ASN, latency (s) and efficiency of a scenario.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, scenario: &PyScenario) -> PyResult<Bound<'py, PyDict>> {
    let a = analysis::analyze(&scenario.inner, None).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("sensors", a.sensors)?;
    d.set_item("onebit_increments", a.onebit_increments)?;
    d.set_item("ideal_increments", a.ideal_increments)?;
    d.set_item("onebit_asn", a.onebit_asn)?;
    d.set_item("ideal_asn", a.ideal_asn)?;
    d.set_item("latency", (a.report.latency0, a.report.latency1))?;
    d.set_item("efficiency", (a.report.efficiency0, a.report.efficiency1))?;
    Ok(d)
}

/// Monte-Carlo experiment; `truth` is "H0" or "H1", `receiver` "1bit" or "ideal".
#[pyfunction]
#[pyo3(signature = (scenario, runs, truth, receiver, horizon=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    runs: u64,
    truth: &str,
    receiver: &str,
    horizon: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let truth = match truth {
        "H0" => Truth::H0,
        "H1" => Truth::H1,
        other => return Err(PyValueError::new_err(format!("unknown truth {other:?}"))),
    };
    let receiver = match receiver {
        "1bit" => Receiver::OneBit,
        "ideal" => Receiver::Ideal,
        other => return Err(PyValueError::new_err(format!("unknown receiver {other:?}"))),
    };
    let spec = ExperimentSpec {
        scenario: scenario.inner.clone(),
        runs,
        truth,
        receiver,
        horizon,
    };
    let r = py.detach(|| montecarlo::run_experiment(&spec)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("runs", r.runs)?;
    d.set_item("decided_h0", r.decided_h0)?;
    d.set_item("decided_h1", r.decided_h1)?;
    d.set_item("truncated", r.truncated)?;
    d.set_item("empirical_asn", (r.empirical_asn.mean, r.empirical_asn.stderr))?;
    d.set_item("analytic_asn", r.analytic_asn)?;
    d.set_item("analytic_slope", r.analytic_slope)?;
    d.set_item("drift", (r.drift.mean, r.drift.stderr))?;
    d.set_item("error_rate", r.error_rate)?;
    d.set_item("truncation_rate", r.truncation_rate)?;
    d.set_item("trajectory", r.trajectory)?;
    Ok(d)
}

#[pymodule]
fn onebit_sprt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyBinaryModel>()?;
    m.add_function(wrap_pyfunction!(build_steering, m)?)?;
    m.add_function(wrap_pyfunction!(build_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(orthant4, m)?)?;
    m.add_function(wrap_pyfunction!(quad_moment, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(asn, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_sprt, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(rows(&m), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(from_rows(rows(&m)).unwrap(), m);
        assert!(from_rows(vec![vec![1.0, 2.0]]).is_err());
    }
}
