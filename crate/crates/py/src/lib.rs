//! Python bindings. Structured inputs and outputs (registers, circuits,
//! schedules, budgets) cross the boundary as JSON documents or dicts.

use std::sync::Arc;

use aeqsim_core::blockade::{self, LossMethod, TwoLevelAmplitudes};
use aeqsim_core::budget::gate_fidelity_estimate;
use aeqsim_core::compiler::{compile_with_species, Circuit, Device, Schedule};
use aeqsim_core::polarizability::{match_depths as core_match_depths, LatticeSpec};
use aeqsim_core::register::{phase_gate_truth_table as core_phase_table, ProtocolOp, RegisterDocument};
use aeqsim_core::{AtomicState, HalfInt, NoiseModel, Polarizability, SpeciesModel};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py_json<'py, T: serde::Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn half(x: f64) -> PyResult<HalfInt> {
    HalfInt::from_f64(x).map_err(err)
}

#[pyclass(name = "Species", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpecies {
    inner: Arc<SpeciesModel>,
}

#[pymethods]
impl PySpecies {
    /// Bundled ⁸⁷Sr data.
    #[staticmethod]
    fn sr87() -> Self {
        PySpecies { inner: Arc::new(SpeciesModel::sr87()) }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySpecies { inner: Arc::new(SpeciesModel::from_json(text).map_err(err)?) })
    }

    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        Ok(PySpecies { inner: Arc::new(SpeciesModel::from_path(path).map_err(err)?) })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn levels(&self) -> Vec<String> {
        self.inner.levels.iter().map(|l| l.name.clone()).collect()
    }

    /// Zeeman shift in Hz; `f` selects a hyperfine level.
    #[pyo3(signature = (level, m, b_gauss, f=None))]
    fn zeeman_shift(&self, level: &str, m: f64, b_gauss: f64, f: Option<f64>) -> PyResult<f64> {
        let state = match f {
            Some(f) => AtomicState::hyperfine(level, half(f)?, half(m)?),
            None => AtomicState::nuclear(level, half(m)?),
        };
        self.inner.zeeman_shift(&state, b_gauss).map_err(err)
    }

    #[pyo3(signature = (level, m, gradient_g_per_cm, spacing_nm, f=None))]
    fn gradient_site_splitting(
        &self,
        level: &str,
        m: f64,
        gradient_g_per_cm: f64,
        spacing_nm: f64,
        f: Option<f64>,
    ) -> PyResult<f64> {
        let state = match f {
            Some(f) => AtomicState::hyperfine(level, half(f)?, half(m)?),
            None => AtomicState::nuclear(level, half(m)?),
        };
        self.inner.gradient_site_splitting(&state, gradient_g_per_cm, spacing_nm).map_err(err)
    }

    /// Polarizability in atomic units.
    fn alpha(&self, level: &str, wavelength_nm: f64) -> PyResult<f64> {
        Polarizability::new(&self.inner).alpha(level, wavelength_nm).map_err(err)
    }

    #[pyo3(signature = (level, lo_nm, hi_nm, step_nm=0.05))]
    fn zero_crossings(&self, level: &str, lo_nm: f64, hi_nm: f64, step_nm: f64) -> PyResult<Vec<f64>> {
        Polarizability::new(&self.inner).find_zero_crossings(level, (lo_nm, hi_nm), step_nm).map_err(err)
    }

    /// Transport/storage intensity ratio giving equal depths.
    fn match_depths(&self, storage_level: &str, storage_nm: f64, transport_level: &str, transport_nm: f64) -> PyResult<f64> {
        core_match_depths(
            &LatticeSpec::new(storage_level, storage_nm, 1.0),
            &LatticeSpec::new(transport_level, transport_nm, 1.0),
            &self.inner,
        )
        .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&*self.inner).map_err(err)
    }
}

fn species_or_default(species: Option<&PySpecies>) -> Arc<SpeciesModel> {
    species.map_or_else(|| Arc::new(SpeciesModel::sr87()), |s| s.inner.clone())
}

#[pyclass(name = "BlockadeParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlockadeParams {
    inner: blockade::BlockadeParams,
}

#[pymethods]
impl PyBlockadeParams {
    /// Angular frequencies Ω, Δ_U, Γ in any common unit.
    #[new]
    fn new(omega: f64, delta_u: f64, gamma: f64) -> PyResult<Self> {
        Ok(PyBlockadeParams { inner: blockade::BlockadeParams::new(omega, delta_u, gamma).map_err(err)? })
    }

    /// Ω = 1 with Γ and Δ_U given in units of Ω.
    #[staticmethod]
    fn from_ratios(gamma_over_omega: f64, delta_over_omega: f64) -> PyResult<Self> {
        Ok(PyBlockadeParams {
            inner: blockade::BlockadeParams::from_ratios(gamma_over_omega, delta_over_omega).map_err(err)?,
        })
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn delta_u(&self) -> f64 {
        self.inner.delta_u
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    /// Amplitudes (c_g, c_e) at time t from `psi0` (default |g⟩).
    #[pyo3(signature = (t, psi0=None, rk4=false))]
    fn evolve(&self, t: f64, psi0: Option<(Complex64, Complex64)>, rk4: bool) -> PyResult<(Complex64, Complex64)> {
        let psi = psi0.map_or_else(TwoLevelAmplitudes::ground, |(g, e)| TwoLevelAmplitudes::new(g, e));
        let out = if rk4 {
            blockade::evolve_rk4(&self.inner, psi, t, blockade::default_rk4_step(&self.inner))
        } else {
            blockade::evolve(&self.inner, psi, t)
        }
        .map_err(err)?;
        Ok((out.c_g, out.c_e))
    }

    #[pyo3(signature = (t, method="analytic"))]
    fn loss_probability(&self, t: f64, method: &str) -> PyResult<f64> {
        let m = match method {
            "analytic" => LossMethod::Analytic,
            "perturbative" => LossMethod::Perturbative,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        blockade::loss_probability(&self.inner, t, m).map_err(err)
    }

    /// (Ωt samples, loss samples) on a uniform grid.
    fn loss_curve(&self, omega_t_max: f64, n_points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let c = blockade::loss_curve(&self.inner, omega_t_max, n_points).map_err(err)?;
        Ok((c.times, c.loss))
    }

    fn gamma_eff(&self) -> f64 {
        blockade::gamma_eff(&self.inner)
    }

    /// Phase and loss of the blocked branch after the 2π pulse.
    fn gate_outcome<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, &blockade::blockade_gate_outcome(&self.inner).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("BlockadeParams(omega={}, delta_u={}, gamma={})", self.inner.omega, self.inner.delta_u, self.inner.gamma)
    }
}

#[pyclass(name = "Register")]
struct PyRegister {
    inner: aeqsim_core::Register,
}

#[pymethods]
impl PyRegister {
    /// Builds a register from its JSON document.
    #[staticmethod]
    #[pyo3(signature = (document, species=None))]
    fn from_json(document: &str, species: Option<&PySpecies>) -> PyResult<Self> {
        let doc = RegisterDocument::from_json(document).map_err(err)?;
        Ok(PyRegister { inner: doc.into_register(species_or_default(species)).map_err(err)? })
    }

    /// Runs a JSON op list, `{"ops": [...]}` or a compiled schedule.
    fn run(&mut self, protocol: &str) -> PyResult<()> {
        let value: serde_json::Value = serde_json::from_str(protocol).map_err(err)?;
        let ops: Vec<ProtocolOp> = if value.get("layers").is_some() {
            serde_json::from_value::<Schedule>(value).map_err(err)?.ops()
        } else if let Some(ops) = value.get("ops") {
            serde_json::from_value(ops.clone()).map_err(err)?
        } else {
            serde_json::from_value(value).map_err(err)?
        };
        self.inner.run(&ops).map_err(err)
    }

    #[getter]
    fn time_s(&self) -> f64 {
        self.inner.time_s()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn lost_weight(&self) -> f64 {
        self.inner.lost_weight()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_document()).map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, &self.inner.to_document())
    }

    fn log<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, self.inner.log())
    }
}

/// Compiles a circuit document on a device document; returns the schedule as JSON.
#[pyfunction]
#[pyo3(signature = (circuit, device, species=None))]
fn compile_circuit(circuit: &str, device: &str, species: Option<&PySpecies>) -> PyResult<String> {
    let c = Circuit::from_json(circuit).map_err(err)?;
    let d = Device::from_json(device).map_err(err)?;
    let s = compile_with_species(species_or_default(species), &c, &d).map_err(err)?;
    serde_json::to_string(&s).map_err(err)
}

/// Total duration of a schedule document in seconds.
#[pyfunction]
fn schedule_duration(schedule: &str) -> PyResult<f64> {
    Ok(aeqsim_core::compiler::schedule_duration(&Schedule::from_json(schedule).map_err(err)?))
}

/// Itemized budget of a schedule document as a dict.
#[pyfunction]
#[pyo3(signature = (schedule, noise=None, blockade_loss=None, species=None))]
fn price<'py>(
    py: Python<'py>,
    schedule: &str,
    noise: Option<&str>,
    blockade_loss: Option<f64>,
    species: Option<&PySpecies>,
) -> PyResult<Bound<'py, PyAny>> {
    let sp = species_or_default(species);
    let s = Schedule::from_json(schedule).map_err(err)?;
    let n = match noise {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => NoiseModel::reference(&sp),
    };
    to_py_json(py, &gate_fidelity_estimate(&sp, &s, &n, blockade_loss).map_err(err)?)
}

/// Phases of the collisional gate on |00⟩, |01⟩, |10⟩, |11⟩.
#[pyfunction]
fn phase_gate_truth_table(u_hz: f64, t_s: f64) -> PyResult<[f64; 4]> {
    core_phase_table(u_hz, t_s).map_err(err)
}

#[pymodule]
fn aeqsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpecies>()?;
    m.add_class::<PyBlockadeParams>()?;
    m.add_class::<PyRegister>()?;
    m.add_function(wrap_pyfunction!(compile_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_duration, m)?)?;
    m.add_function(wrap_pyfunction!(price, m)?)?;
    m.add_function(wrap_pyfunction!(phase_gate_truth_table, m)?)?;
    Ok(())
}
