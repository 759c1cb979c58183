//! Serializable scenario descriptions and the built wave fields they produce.

use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierScenario, BarrierWave, KGrid, DEFAULT_K_NODES};
use crate::error::{Error, Result};
use crate::guidance::{velocity_factorized, FactorizedWaveSample, WaveSample};
use crate::packets::{UniformFieldPacket, VISIBLE_FIELD_FORCE};
use crate::phys::{electron_constants, gravity_from_si, PhysicalConstants, STANDARD_GRAVITY_SI};
use crate::quadrature::QuadratureRule;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "force")]
pub enum FieldPreset {
    /// K = m g.
    Gravity,
    /// K = 0.05 eV/A, which deflects a 5 eV electron by about 1 A over 20 A.
    Visible,
    /// Explicit K in eV/A.
    Custom(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformFieldSpec {
    pub sigma0: f64,
    /// Kinetic energy of the group motion, E0 = m u^2 / 2, eV.
    pub energy: f64,
    /// Particle mass in units of the electron mass.
    pub mass_factor: f64,
    pub field: FieldPreset,
    /// Gravitational acceleration for the gravity preset, m/s^2.
    pub g_si: f64,
}

impl Default for UniformFieldSpec {
    fn default() -> Self {
        UniformFieldSpec {
            sigma0: 5.0,
            energy: 5.0,
            mass_factor: 1.0,
            field: FieldPreset::Gravity,
            g_si: STANDARD_GRAVITY_SI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub v0: f64,
    pub width: f64,
    pub energy: f64,
    pub sigma0: f64,
    /// Initial centre; `None` means -10 sigma0.
    pub x0: Option<f64>,
    pub mass_factor: f64,
    pub k_nodes: usize,
    pub rule: QuadratureRule,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        BarrierSpec {
            v0: 8.0,
            width: 10.0,
            energy: 10.0,
            sigma0: 5.0,
            x0: None,
            mass_factor: 1.0,
            k_nodes: DEFAULT_K_NODES,
            rule: QuadratureRule::GaussLegendre,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scenario")]
pub enum ScenarioSpec {
    UniformField(UniformFieldSpec),
    Barrier(BarrierSpec),
}

impl ScenarioSpec {
    pub fn constants(&self) -> PhysicalConstants {
        let base = electron_constants();
        match self {
            ScenarioSpec::UniformField(u) => PhysicalConstants {
                gravity: gravity_from_si(u.g_si),
                ..base.with_mass_factor(u.mass_factor)
            },
            ScenarioSpec::Barrier(b) => base.with_mass_factor(b.mass_factor),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let c = self.constants();
        match *self {
            ScenarioSpec::UniformField(u) => {
                if !(u.mass_factor > 0.0) {
                    return Err(Error::Input("mass factor must be positive".into()));
                }
                let speed = c.speed_for_energy(u.energy)?;
                let force = match u.field {
                    FieldPreset::Gravity => c.mass * c.gravity,
                    FieldPreset::Visible => VISIBLE_FIELD_FORCE,
                    FieldPreset::Custom(k) => k,
                };
                Ok(Scenario::UniformField(UniformFieldPacket::new(u.sigma0, speed, force, c)?))
            }
            ScenarioSpec::Barrier(b) => {
                if !(b.mass_factor > 0.0) {
                    return Err(Error::Input("mass factor must be positive".into()));
                }
                if !(b.sigma0 > 0.0) {
                    return Err(Error::Input(format!("sigma0 must be positive, got {}", b.sigma0)));
                }
                let k0 = c.energy_to_wavenumber(b.energy)?;
                let scen = BarrierScenario {
                    v0: b.v0,
                    width: b.width,
                    k0,
                    sigma0: b.sigma0,
                    x0: b.x0.unwrap_or(-10.0 * b.sigma0),
                    kgrid: KGrid::around(k0, b.sigma0, b.k_nodes, b.rule),
                };
                Ok(Scenario::Barrier(BarrierWave::new(scen, c)?))
            }
        }
    }

    /// Group speed of the packet centre, A/fs.
    pub fn group_speed(&self) -> Result<f64> {
        let c = self.constants();
        match self {
            ScenarioSpec::UniformField(u) => c.speed_for_energy(u.energy),
            ScenarioSpec::Barrier(b) => c.speed_for_energy(b.energy),
        }
    }

    pub fn energy_mut(&mut self) -> &mut f64 {
        match self {
            ScenarioSpec::UniformField(u) => &mut u.energy,
            ScenarioSpec::Barrier(b) => &mut b.energy,
        }
    }

    pub fn mass_factor_mut(&mut self) -> &mut f64 {
        match self {
            ScenarioSpec::UniformField(u) => &mut u.mass_factor,
            ScenarioSpec::Barrier(b) => &mut b.mass_factor,
        }
    }

    pub fn sigma0(&self) -> f64 {
        match self {
            ScenarioSpec::UniformField(u) => u.sigma0,
            ScenarioSpec::Barrier(b) => b.sigma0,
        }
    }
}

/// Upper bound on the memory spent caching barrier time phases.
pub const TIME_TABLE_MAX_BYTES: usize = 768 << 20;

/// A wave field ready for evaluation.
#[derive(Clone, Debug)]
pub enum Scenario {
    UniformField(UniformFieldPacket),
    Barrier(BarrierWave),
}

impl Scenario {
    pub fn constants(&self) -> &PhysicalConstants {
        match self {
            Scenario::UniformField(p) => &p.constants,
            Scenario::Barrier(b) => b.constants(),
        }
    }

    pub fn factorized_sample(&self, x: Vec3, t: f64) -> FactorizedWaveSample {
        match self {
            Scenario::UniformField(p) => p.factorized_sample(x, t),
            Scenario::Barrier(b) => b.factorized_sample(x, t),
        }
    }

    pub fn wave_sample(&self, x: Vec3, t: f64) -> WaveSample {
        self.factorized_sample(x, t).assemble()
    }

    /// Bohmian velocity with s_hat = z when `spin_on`, via the factorized path.
    pub fn velocity(&self, x: Vec3, t: f64, spin_on: bool) -> Result<Vec3> {
        velocity_factorized(&self.factorized_sample(x, t), spin_on, self.constants())
    }

    /// Centre of rho(., 0).
    pub fn initial_center(&self) -> Vec3 {
        match self {
            Scenario::UniformField(_) => Vec3::ZERO,
            Scenario::Barrier(b) => Vec3::new(b.scenario().x0, 0.0, 0.0),
        }
    }

    pub fn sigma0(&self) -> f64 {
        match self {
            Scenario::UniformField(p) => p.sigma0,
            Scenario::Barrier(b) => b.scenario().sigma0,
        }
    }

    /// Speed of the packet centre at t = 0.
    pub fn group_speed(&self) -> f64 {
        match self {
            Scenario::UniformField(p) => p.u,
            Scenario::Barrier(b) => b.scenario().group_speed(b.constants()),
        }
    }

    /// Same field with barrier time phases cached on t = i * step, i < count.
    pub fn with_time_table(&self, step: f64, count: usize) -> Scenario {
        match self {
            Scenario::Barrier(b) => Scenario::Barrier(b.clone().with_time_table(step, count, TIME_TABLE_MAX_BYTES)),
            other => other.clone(),
        }
    }

    /// Barrier occupies 0 <= x <= width.
    pub fn barrier_width(&self) -> Option<f64> {
        match self {
            Scenario::UniformField(_) => None,
            Scenario::Barrier(b) => Some(b.scenario().width),
        }
    }
}
