//! Unit system and physical constants.
//!
//! Everything internal is expressed in angstrom (A), femtosecond (fs) and
//! electron-volt (eV). Mass therefore carries units of eV fs^2 / A^2, and
//! hbar is in eV fs. Constants are passed by value into every formula, so a
//! heavier particle (mass sweeps) only needs a different [`PhysicalConstants`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, eV fs (CODATA 2018).
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// Electron rest energy m_e c^2 in eV (CODATA 2018).
pub const ELECTRON_REST_ENERGY_EV: f64 = 510_998.950_00;
/// Speed of light in A/fs.
pub const LIGHT_SPEED_A_PER_FS: f64 = 2_997.924_58;
/// Standard gravity used by the gravity preset, m/s^2.
pub const STANDARD_GRAVITY_SI: f64 = 9.8;

/// 1 m/s^2 expressed in A/fs^2.
const SI_ACCEL_TO_A_PER_FS2: f64 = 1e10 / 1e30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// eV fs
    pub hbar: f64,
    /// eV fs^2 / A^2
    pub mass: f64,
    /// A / fs
    pub light_speed: f64,
    /// A / fs^2
    pub gravity: f64,
}

/// Constants for an electron, with g = 9.8 m/s^2.
pub fn electron_constants() -> PhysicalConstants {
    PhysicalConstants {
        hbar: HBAR_EV_FS,
        mass: ELECTRON_REST_ENERGY_EV / (LIGHT_SPEED_A_PER_FS * LIGHT_SPEED_A_PER_FS),
        light_speed: LIGHT_SPEED_A_PER_FS,
        gravity: gravity_from_si(STANDARD_GRAVITY_SI),
    }
}

/// Converts an acceleration from m/s^2 to A/fs^2.
pub fn gravity_from_si(g_si: f64) -> f64 {
    g_si * SI_ACCEL_TO_A_PER_FS2
}

impl PhysicalConstants {
    /// Same unit system with the particle mass scaled by `factor`.
    pub fn with_mass_factor(self, factor: f64) -> Self {
        PhysicalConstants {
            mass: self.mass * factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("light_speed", self.light_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::Input("gravity must be finite".into()));
        }
        Ok(())
    }

    /// hbar^2 / 2m in eV A^2: the energy of a plane wave with k = 1/A.
    pub fn kinetic_scale(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }

    /// hbar / m in A^2 / fs.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }

    pub fn energy_to_wavenumber(&self, energy: f64) -> Result<f64> {
        if !(energy >= 0.0) {
            return Err(Error::Domain(format!(
                "energy must be non-negative, got {energy} eV"
            )));
        }
        Ok((2.0 * self.mass * energy).sqrt() / self.hbar)
    }

    pub fn wavenumber_to_energy(&self, k: f64) -> f64 {
        self.kinetic_scale() * k * k
    }

    /// Speed of a classical particle with kinetic energy `energy`.
    pub fn speed_for_energy(&self, energy: f64) -> Result<f64> {
        if !(energy >= 0.0) {
            return Err(Error::Domain(format!(
                "energy must be non-negative, got {energy} eV"
            )));
        }
        Ok((2.0 * energy / self.mass).sqrt())
    }

    pub fn energy_for_speed(&self, speed: f64) -> f64 {
        0.5 * self.mass * speed * speed
    }
}
