//! Analytic Gaussian packet in a uniform force field V(x) = K x.
//!
//! The packet starts centred on the origin with width sigma0, moves with group
//! velocity `u` along x, and is accelerated by the force `-K` along x. The
//! wave is a product of three one-dimensional factors, which is what the
//! factorized velocity path consumes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{AxisFactor, FactorizedWaveSample, WaveSample};
use crate::phys::PhysicalConstants;
use crate::vec3::Vec3;

/// Force (eV/A) for which an electron at 5 eV is deflected by about 1 A over
/// the 20 A transit to the default detector. Gravity (K = m g) deflects by
/// roughly 1e-19 A on the same time scale, which is invisible in any figure.
pub const VISIBLE_FIELD_FORCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformFieldPacket {
    /// Initial width, A.
    pub sigma0: f64,
    /// Group velocity along x, A/fs.
    pub u: f64,
    /// Force constant K along x, eV/A.
    pub force: f64,
    pub constants: PhysicalConstants,
}

impl UniformFieldPacket {
    pub fn new(sigma0: f64, u: f64, force: f64, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(Error::Input(format!("sigma0 must be positive, got {sigma0}")));
        }
        if !u.is_finite() || !force.is_finite() {
            return Err(Error::Input("group velocity and force must be finite".into()));
        }
        Ok(UniformFieldPacket {
            sigma0,
            u,
            force,
            constants,
        })
    }

    /// Packet with kinetic energy `energy` (eV) in the field K = m g.
    pub fn gravity_preset(sigma0: f64, energy: f64, constants: PhysicalConstants) -> Result<Self> {
        let u = constants.speed_for_energy(energy)?;
        Self::new(sigma0, u, constants.mass * constants.gravity, constants)
    }

    fn mass(&self) -> f64 {
        self.constants.mass
    }

    /// hbar / (2 m sigma0^2), the inverse spreading time.
    pub fn spreading_rate(&self) -> f64 {
        self.constants.hbar / (2.0 * self.mass() * self.sigma0 * self.sigma0)
    }

    /// Time after which sigma(t) = sqrt(2) sigma0.
    pub fn spreading_time(&self) -> f64 {
        1.0 / self.spreading_rate()
    }

    /// s_t = sigma0 (1 + i hbar t / 2 m sigma0^2).
    pub fn complex_width(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma0, self.sigma0 * self.spreading_rate() * t)
    }

    /// sigma(t) = |s_t|, the real spread of the density.
    pub fn spread(&self, t: f64) -> f64 {
        let a = self.spreading_rate() * t;
        self.sigma0 * (1.0 + a * a).sqrt()
    }

    /// x-coordinate of the packet centre, u t - K t^2 / 2m.
    pub fn center_x(&self, t: f64) -> f64 {
        self.u * t - self.force * t * t / (2.0 * self.mass())
    }

    pub fn center(&self, t: f64) -> Vec3 {
        Vec3::new(self.center_x(t), 0.0, 0.0)
    }

    /// (2 pi s_t^2)^(-1/4), the normalization shared by every axis.
    fn axis_norm(&self, st: Complex64) -> Complex64 {
        // |arg s_t| < pi/2, so (s_t^2)^(-1/4) = s_t^(-1/2) on the principal branch.
        st.sqrt().inv() * (2.0 * std::f64::consts::PI).powf(-0.25)
    }

    /// Spreading Gaussian factor along an axis without drift (y or z).
    pub fn transverse_factor(&self, y: f64, t: f64) -> AxisFactor {
        let st = self.complex_width(t);
        let denom = 2.0 * st * self.sigma0;
        let psi = self.axis_norm(st) * (-(y * y) / (2.0 * denom)).exp();
        AxisFactor::new(psi, psi * (-y / denom))
    }

    /// Drifting, accelerated factor along x.
    pub fn longitudinal_factor(&self, x: f64, t: f64) -> AxisFactor {
        let m = self.mass();
        let hbar = self.constants.hbar;
        let st = self.complex_width(t);
        let denom = 2.0 * st * self.sigma0;
        let xi = x - self.center_x(t);
        let momentum_speed = self.u - self.force * t / m;
        let phase = (m / hbar)
            * (momentum_speed * (x - 0.5 * self.u * t)
                - self.force * self.force * t * t * t / (6.0 * m * m));
        let psi = self.axis_norm(st) * (-(xi * xi) / (2.0 * denom) + Complex64::new(0.0, phase)).exp();
        let log_d = -xi / denom + Complex64::new(0.0, m * momentum_speed / hbar);
        AxisFactor::new(psi, psi * log_d)
    }

    pub fn factorized_sample(&self, x: Vec3, t: f64) -> FactorizedWaveSample {
        FactorizedWaveSample {
            axes: [
                self.longitudinal_factor(x.x, t),
                self.transverse_factor(x.y, t),
                self.transverse_factor(x.z, t),
            ],
            position: x,
            time: t,
        }
    }

    pub fn wave_sample(&self, x: Vec3, t: f64) -> WaveSample {
        self.factorized_sample(x, t).assemble()
    }

    pub fn psi(&self, x: Vec3, t: f64) -> Complex64 {
        self.wave_sample(x, t).psi
    }

    pub fn grad_psi(&self, x: Vec3, t: f64) -> [Complex64; 3] {
        self.wave_sample(x, t).grad_psi
    }

    /// Closed-form Gaussian density centred on u t - K t^2/2m.
    pub fn rho(&self, x: Vec3, t: f64) -> f64 {
        let s2 = self.spread(t).powi(2);
        let r2 = (x - self.center(t)).dot(x - self.center(t));
        (2.0 * std::f64::consts::PI * s2).powf(-1.5) * (-r2 / (2.0 * s2)).exp()
    }

    /// Closed-form velocity field with s_hat = z. The spin terms use hbar/(2 m sigma^2).
    pub fn velocity(&self, x: Vec3, t: f64, spin_on: bool) -> Vec3 {
        let m = self.mass();
        let hbar = self.constants.hbar;
        let s0 = self.sigma0;
        let rate = hbar * hbar * t / (4.0 * m * m * s0.powi(4) + hbar * hbar * t * t);
        let xi = x.x - self.center_x(t);
        let mut v = Vec3::new(self.u - self.force * t / m + rate * xi, rate * x.y, rate * x.z);
        if spin_on {
            let b = hbar / (2.0 * m * self.spread(t).powi(2));
            v.x -= b * x.y;
            v.y += b * xi;
        }
        v
    }

    /// z-coordinate of the streamline starting at z0.
    pub fn z_exact(&self, z0: f64, t: f64) -> f64 {
        let a = self.spreading_rate() * t;
        z0 * (1.0 + a * a).sqrt()
    }

    /// Exact spin-on streamline in the (x, y) plane: relative to the centre the
    /// point is scaled by sigma(t)/sigma0 and rotated by atan(t / spreading_time).
    pub fn xy_exact(&self, x0: f64, y0: f64, t: f64, spin_on: bool) -> (f64, f64) {
        let a = self.spreading_rate() * t;
        let scale = (1.0 + a * a).sqrt();
        let theta = if spin_on { a.atan() } else { 0.0 };
        let (s, c) = theta.sin_cos();
        (
            self.center_x(t) + scale * (x0 * c - y0 * s),
            scale * (x0 * s + y0 * c),
        )
    }
}
