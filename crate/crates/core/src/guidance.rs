//! Probability currents and the Bohmian velocity field.
//!
//! The spinless current is `(hbar/m) Im(psi* grad psi)`. The spin-modified
//! current adds the divergence-free term `(hbar/2m) grad(rho) x s_hat`, where
//! `grad(rho) = 2 Re(psi* grad psi)` is always taken from the analytic
//! gradient of the sample, never from finite differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phys::PhysicalConstants;
use crate::vec3::Vec3;

/// Densities at or below this are treated as nodes of the wave function.
pub const RHO_FLOOR: f64 = 1e-30;

/// Squared modulus below which one factor of a factorized wave counts as a node.
pub const COMPONENT_FLOOR: f64 = 1e-30;

const SPINOR_NORM_TOL: f64 = 1e-9;

/// Fixed two-component spinor chi, normalized so that chi^dagger chi = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorState {
    pub up: Complex64,
    pub down: Complex64,
}

impl SpinorState {
    pub fn new(up: Complex64, down: Complex64) -> Result<Self> {
        let chi = SpinorState { up, down };
        chi.check_normalized()?;
        Ok(chi)
    }

    /// Spin up along z: s_hat = (0, 0, 1).
    pub fn up_z() -> Self {
        SpinorState {
            up: Complex64::new(1.0, 0.0),
            down: Complex64::new(0.0, 0.0),
        }
    }

    pub fn down_z() -> Self {
        SpinorState {
            up: Complex64::new(0.0, 0.0),
            down: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > SPINOR_NORM_TOL || !n.is_finite() {
            return Err(Error::Input(format!(
                "spinor must satisfy |up|^2 + |down|^2 = 1, got {n}"
            )));
        }
        Ok(())
    }

    pub fn s_hat(&self) -> Vec3 {
        // chi^dagger sigma chi for the three Pauli matrices.
        let cross = self.up.conj() * self.down;
        Vec3::new(
            2.0 * cross.re,
            2.0 * cross.im,
            self.up.norm_sqr() - self.down.norm_sqr(),
        )
    }
}

/// Unit spin direction for a normalized spinor.
pub fn spin_vector(chi: &SpinorState) -> Result<Vec3> {
    chi.check_normalized()?;
    Ok(chi.s_hat())
}

/// Wave value and analytic gradient at one space-time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveSample {
    pub psi: Complex64,
    pub grad_psi: [Complex64; 3],
    pub position: Vec3,
    pub time: f64,
}

impl WaveSample {
    pub fn density(&self) -> f64 {
        self.psi.norm_sqr()
    }

    /// psi* grad psi, whose imaginary part drives the convective current and
    /// whose real part is half the density gradient.
    fn psi_conj_grad(&self) -> [Complex64; 3] {
        let c = self.psi.conj();
        [c * self.grad_psi[0], c * self.grad_psi[1], c * self.grad_psi[2]]
    }

    pub fn density_gradient(&self) -> Vec3 {
        let g = self.psi_conj_grad();
        Vec3::new(2.0 * g[0].re, 2.0 * g[1].re, 2.0 * g[2].re)
    }

    /// Multiplies the sample by a global phase; currents are unchanged.
    pub fn with_phase(&self, phase: f64) -> Self {
        let p = Complex64::from_polar(1.0, phase);
        WaveSample {
            psi: self.psi * p,
            grad_psi: self.grad_psi.map(|g| g * p),
            ..*self
        }
    }
}

/// One-dimensional factor of a product wave: value and x-derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisFactor {
    pub psi: Complex64,
    pub dpsi: Complex64,
}

impl AxisFactor {
    pub fn new(psi: Complex64, dpsi: Complex64) -> Self {
        AxisFactor { psi, dpsi }
    }

    /// Logarithmic derivative d(psi)/psi.
    fn log_derivative(&self) -> Complex64 {
        self.dpsi / self.psi
    }
}

/// psi(x, y, z, t) = psi_x(x, t) psi_y(y, t) psi_z(z, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizedWaveSample {
    pub axes: [AxisFactor; 3],
    pub position: Vec3,
    pub time: f64,
}

impl FactorizedWaveSample {
    /// Full sample via the product rule.
    pub fn assemble(&self) -> WaveSample {
        let [fx, fy, fz] = self.axes;
        WaveSample {
            psi: fx.psi * fy.psi * fz.psi,
            grad_psi: [
                fx.dpsi * fy.psi * fz.psi,
                fx.psi * fy.dpsi * fz.psi,
                fx.psi * fy.psi * fz.dpsi,
            ],
            position: self.position,
            time: self.time,
        }
    }

    pub fn density(&self) -> f64 {
        self.axes.iter().map(|a| a.psi.norm_sqr()).product()
    }
}

pub fn current_spinless(w: &WaveSample, c: &PhysicalConstants) -> Vec3 {
    let g = w.psi_conj_grad();
    Vec3::new(g[0].im, g[1].im, g[2].im) * c.hbar_over_mass()
}

/// The divergence-free addition `(hbar/2m) grad(rho) x s_hat` on its own.
pub fn spin_current_term(w: &WaveSample, s_hat: Vec3, c: &PhysicalConstants) -> Vec3 {
    w.density_gradient().cross(s_hat) * (0.5 * c.hbar_over_mass())
}

pub fn current_spin(w: &WaveSample, s_hat: Vec3, c: &PhysicalConstants) -> Vec3 {
    current_spinless(w, c) + spin_current_term(w, s_hat, c)
}

fn node_error(position: Vec3, t: f64, density: f64) -> Error {
    Error::Node {
        x: position.x,
        y: position.y,
        z: position.z,
        t,
        density,
    }
}

/// Bohmian velocity J/rho, with the spin term when `s_hat` is given.
pub fn velocity(w: &WaveSample, s_hat: Option<Vec3>, c: &PhysicalConstants) -> Result<Vec3> {
    let rho = w.density();
    if !(rho > RHO_FLOOR) {
        return Err(node_error(w.position, w.time, rho));
    }
    let j = match s_hat {
        Some(s) => current_spin(w, s, c),
        None => current_spinless(w, c),
    };
    Ok(j * (1.0 / rho))
}

/// Velocity for a product wave with s_hat = z, built from the per-axis
/// logarithmic derivatives. Never forms the full density, so it stays
/// accurate where rho itself underflows.
pub fn velocity_factorized(
    f: &FactorizedWaveSample,
    spin_on: bool,
    c: &PhysicalConstants,
) -> Result<Vec3> {
    for axis in &f.axes {
        let d = axis.psi.norm_sqr();
        if !(d > COMPONENT_FLOOR) {
            return Err(node_error(f.position, f.time, f.density()));
        }
    }
    let [lx, ly, lz] = f.axes.map(|a| a.log_derivative());
    let spin = if spin_on { 1.0 } else { 0.0 };
    let hm = c.hbar_over_mass();
    Ok(Vec3::new(
        hm * (lx.im + spin * ly.re),
        hm * (ly.im - spin * lx.re),
        hm * lz.im,
    ))
}
