use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use spintime::arrival::{adaptive_series, arrival_distribution, summarize, SeriesSettings};
use spintime::barrier::transmission_amplitude as amplitude;
use spintime::phys::electron_constants;
use spintime::quadrature::QuadratureRule;
use spintime::scenario::{BarrierSpec, FieldPreset, UniformFieldSpec};
use spintime::trajectory::{integrate_path, run_ensemble, IntegratorConfig, BARRIER_DEFAULT_DT, DEFAULT_DT};
use spintime::{Error, Scenario as CoreScenario, ScenarioSpec, Vec3};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Input(_) | Error::Config { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// electron constants in A / fs / eV
#[pyfunction]
fn constants(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let c = electron_constants();
    let d = PyDict::new(py);
    d.set_item("hbar", c.hbar)?;
    d.set_item("mass", c.mass)?;
    d.set_item("light_speed", c.light_speed)?;
    d.set_item("gravity", c.gravity)?;
    d.set_item("kinetic_scale", c.kinetic_scale())?;
    Ok(d)
}

/// A packet scenario: uniform field or rectangular barrier.
#[pyclass(frozen)]
struct Scenario {
    spec: ScenarioSpec,
    inner: CoreScenario,
}

impl Scenario {
    fn from_spec(spec: ScenarioSpec) -> PyResult<Self> {
        let inner = spec.build().map_err(py_err)?;
        Ok(Scenario { spec, inner })
    }
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    #[pyo3(signature = (sigma0=5.0, energy=5.0, field="gravity", force=None, mass_factor=1.0))]
    fn uniform_field(sigma0: f64, energy: f64, field: &str, force: Option<f64>, mass_factor: f64) -> PyResult<Self> {
        let field = match (field, force) {
            ("gravity", None) => FieldPreset::Gravity,
            ("visible", None) => FieldPreset::Visible,
            ("custom", Some(k)) => FieldPreset::Custom(k),
            _ => return Err(PyValueError::new_err("field is gravity, visible, or custom with force=")),
        };
        Scenario::from_spec(ScenarioSpec::UniformField(UniformFieldSpec {
            sigma0,
            energy,
            mass_factor,
            field,
            ..Default::default()
        }))
    }

    #[staticmethod]
    #[pyo3(signature = (v0=8.0, width=10.0, energy=10.0, sigma0=5.0, x0=None, k_nodes=513, rule="gauss_legendre"))]
    fn barrier(v0: f64, width: f64, energy: f64, sigma0: f64, x0: Option<f64>, k_nodes: usize, rule: &str) -> PyResult<Self> {
        let rule = match rule {
            "gauss_legendre" => QuadratureRule::GaussLegendre,
            "trapezoid" => QuadratureRule::Trapezoid,
            other => return Err(PyValueError::new_err(format!("unknown rule '{other}'"))),
        };
        Scenario::from_spec(ScenarioSpec::Barrier(BarrierSpec {
            v0,
            width,
            energy,
            sigma0,
            x0,
            k_nodes,
            rule,
            ..Default::default()
        }))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner {
            CoreScenario::UniformField(_) => "uniform_field",
            CoreScenario::Barrier(_) => "barrier",
        }
    }

    #[getter]
    fn group_speed(&self) -> f64 {
        self.inner.group_speed()
    }

    fn density(&self, x: f64, y: f64, z: f64, t: f64) -> f64 {
        self.inner.wave_sample(Vec3::new(x, y, z), t).density()
    }

    /// Bohmian velocity (A/fs); spin=True adds the spin term for spin +z.
    #[pyo3(signature = (x, y, z, t, spin=true))]
    fn velocity(&self, x: f64, y: f64, z: f64, t: f64, spin: bool) -> PyResult<(f64, f64, f64)> {
        let v = self.inner.velocity(Vec3::new(x, y, z), t, spin).map_err(py_err)?;
        Ok((v.x, v.y, v.z))
    }

    /// Quadrature value of the transmission probability (barrier only).
    fn transmission_probability(&self) -> PyResult<f64> {
        match &self.inner {
            CoreScenario::Barrier(b) => Ok(b.transmission_probability()),
            CoreScenario::UniformField(_) => Err(PyValueError::new_err("not a barrier scenario")),
        }
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.spec)
    }
}

/// T(k) for a rectangular barrier of height v0 (eV) and width (A).
#[pyfunction]
fn transmission_amplitude(k: f64, v0: f64, width: f64) -> PyResult<Complex64> {
    let c = electron_constants();
    let b = BarrierSpec {
        v0,
        width,
        ..Default::default()
    };
    let Ok(CoreScenario::Barrier(w)) = ScenarioSpec::Barrier(b).build() else {
        return Err(PyValueError::new_err("invalid barrier"));
    };
    amplitude(k, w.scenario(), &c).map_err(py_err)
}

/// Mean arrival times at a detector, with the tail window grown as needed.
#[pyfunction]
#[pyo3(signature = (scenario, detector=(20.0, 20.0, 20.0), with_distribution=false))]
fn arrival_summary<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    detector: (f64, f64, f64),
    with_distribution: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let det = Vec3::new(detector.0, detector.1, detector.2);
    let series = adaptive_series(&scenario.inner, det, &SeriesSettings::default()).map_err(py_err)?;
    let s = summarize(&series).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tau", s.tau)?;
    d.set_item("tau_i", s.tau_i)?;
    d.set_item("delta", s.delta)?;
    d.set_item("tail_bound", s.tail_bound)?;
    d.set_item("converged", s.converged)?;
    d.set_item("t_max", s.t_max)?;
    if with_distribution {
        d.set_item("t", series.times.clone())?;
        d.set_item("pi_spin", arrival_distribution(&series, true).map_err(py_err)?)?;
        d.set_item("pi_nospin", arrival_distribution(&series, false).map_err(py_err)?)?;
    }
    Ok(d)
}

fn integrator(scenario: &Scenario, dt: Option<f64>, t_max: f64) -> IntegratorConfig {
    let barrier = matches!(scenario.inner, CoreScenario::Barrier(_));
    IntegratorConfig {
        dt: dt.unwrap_or(if barrier { BARRIER_DEFAULT_DT } else { DEFAULT_DT }),
        t_max,
        left_stop_plane: if barrier { Some(scenario.inner.initial_center().x - 6.0 * scenario.inner.sigma0()) } else { None },
        ..Default::default()
    }
}

/// One trajectory as a list of (t, x, y, z).
#[pyfunction]
#[pyo3(signature = (scenario, x0, spin=true, dt=None, t_max=10.0))]
fn trajectory(
    scenario: &Scenario,
    x0: (f64, f64, f64),
    spin: bool,
    dt: Option<f64>,
    t_max: f64,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let cfg = IntegratorConfig {
        stop_at_detector: false,
        ..integrator(scenario, dt, t_max)
    };
    let path = integrate_path(Vec3::new(x0.0, x0.1, x0.2), &scenario.inner, spin, &cfg).map_err(py_err)?;
    Ok(path.samples.iter().map(|q| (q.t, q.position.x, q.position.y, q.position.z)).collect())
}

/// Ensemble transmitted and reflected fractions.
#[pyfunction]
#[pyo3(signature = (scenario, paths=100, spin=true, seed=20240601, dt=None, t_max=20.0))]
fn ensemble<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    paths: usize,
    spin: bool,
    seed: u64,
    dt: Option<f64>,
    t_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = IntegratorConfig {
        store_stride: 100,
        ..integrator(scenario, dt, t_max)
    };
    let r = py
        .detach(|| run_ensemble(&scenario.inner, spin, &cfg, paths, seed))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("transmitted_fraction", r.transmitted_fraction)?;
    d.set_item("reflected_fraction", r.reflected_fraction)?;
    d.set_item("aborted_fraction", r.aborted_fraction)?;
    d.set_item("crossings", r.crossing_pairs.len())?;
    d.set_item("warnings", r.warnings)?;
    Ok(d)
}

#[pymodule]
fn spintime_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(arrival_summary, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    Ok(())
}
