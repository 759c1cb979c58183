//! Rectangular barrier V(x) = V0 on [0, d]: stationary scattering states and
//! the time-dependent packet synthesized from them by k-space quadrature.
//!
//! Scattering states are left-incident, normalized as
//!
//! ```text
//! x < 0:       (e^{ikx} + R e^{-ikx}) / sqrt(2 pi)
//! 0 <= x <= d: (C cos(q(x-d)) + D sin(q(x-d))/q) / sqrt(2 pi)
//! x > d:       T e^{ikx} / sqrt(2 pi)
//! ```
//!
//! with `q^2 = k^2 - 2 m V0 / hbar^2`. The interior is written in the
//! cos/sinc basis so that it is even in q: the branch of the square root does
//! not matter, below-barrier states become cosh/sinh automatically, and the
//! E = V0 point needs no special case.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{AxisFactor, FactorizedWaveSample};
use crate::phys::PhysicalConstants;
use crate::quadrature::{rule_on_interval, QuadratureRule};
use crate::vec3::Vec3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Half-width of the default k window in units of sigma_k = 1/(2 sigma0).
pub const K_WINDOW_SIGMAS: f64 = 8.0;
pub const DEFAULT_K_NODES: usize = 513;
/// Largest node count the convergence loop will try.
pub const MAX_K_NODES: usize = 32_769;

/// Relative change allowed when the node count is doubled.
pub const NODE_DOUBLING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub nodes: usize,
    pub rule: QuadratureRule,
}

impl KGrid {
    /// k0 +/- 8 sigma_k with the given rule and node count.
    pub fn around(k0: f64, sigma0: f64, nodes: usize, rule: QuadratureRule) -> Self {
        let half = K_WINDOW_SIGMAS / (2.0 * sigma0);
        KGrid {
            k_min: k0 - half,
            k_max: k0 + half,
            nodes,
            rule,
        }
    }

    /// Same window with the node spacing halved.
    pub fn doubled(&self) -> Self {
        KGrid {
            nodes: 2 * (self.nodes - 1) + 1,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierScenario {
    /// Barrier height, eV.
    pub v0: f64,
    /// Barrier width d, A.
    pub width: f64,
    /// Central wavenumber, 1/A.
    pub k0: f64,
    /// Initial packet width, A.
    pub sigma0: f64,
    /// Initial packet centre, A.
    pub x0: f64,
    pub kgrid: KGrid,
}

impl BarrierScenario {
    /// Packet with central energy `energy` started at x0 = -10 sigma0, default GL grid.
    pub fn from_energy(
        v0: f64,
        width: f64,
        energy: f64,
        sigma0: f64,
        c: &PhysicalConstants,
    ) -> Result<Self> {
        let k0 = c.energy_to_wavenumber(energy)?;
        let s = BarrierScenario {
            v0,
            width,
            k0,
            sigma0,
            x0: -10.0 * sigma0,
            kgrid: KGrid::around(k0, sigma0, DEFAULT_K_NODES, QuadratureRule::GaussLegendre),
        };
        s.validate()?;
        Ok(s)
    }

    /// Group velocity hbar k0 / m.
    pub fn group_speed(&self, c: &PhysicalConstants) -> f64 {
        c.hbar_over_mass() * self.k0
    }

    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::Input(format!("V0 must be >= 0, got {}", self.v0)));
        }
        for (name, v) in [("d", self.width), ("sigma0", self.sigma0), ("k0", self.k0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.x0.is_finite() {
            return Err(Error::Input("x0 must be finite".into()));
        }
        let g = &self.kgrid;
        let half = K_WINDOW_SIGMAS / (2.0 * self.sigma0);
        if !(g.k_min > 0.0) {
            return Err(Error::Input(format!(
                "k grid must lie in k > 0, got k_min = {}",
                g.k_min
            )));
        }
        if g.k_min > self.k0 - half * (1.0 - 1e-12) || g.k_max < self.k0 + half * (1.0 - 1e-12) {
            return Err(Error::Input(format!(
                "k grid [{}, {}] must cover k0 +/- {half}",
                g.k_min, g.k_max
            )));
        }
        if g.nodes < 3 {
            return Err(Error::Input("k grid needs at least 3 nodes".into()));
        }
        if self.x0 + 5.0 * self.sigma0 >= 0.0 {
            warnings.push(format!(
                "initial packet centre x0 = {} is within 5 sigma0 of the barrier",
                self.x0
            ));
        }
        if self.negative_k_weight() >= 1e-12 {
            warnings.push(format!(
                "packet weight at k <= 0 ({:.3e}) is not negligible",
                self.negative_k_weight()
            ));
        }
        Ok(warnings)
    }

    /// Upper bound e^{-2 (k0 sigma0)^2} on the momentum weight that the
    /// left-incident basis leaves out.
    pub fn negative_k_weight(&self) -> f64 {
        (-2.0 * (self.k0 * self.sigma0).powi(2)).exp()
    }
}

/// Squared interior wavenumber q^2 = k^2 - V0/(hbar^2/2m), 1/A^2.
fn interior_q_squared(k: f64, v0: f64, c: &PhysicalConstants) -> f64 {
    k * k - v0 / c.kinetic_scale()
}

/// sin(q s)/q, regular at q = 0.
fn sinc_q(q: Complex64, s: f64) -> Complex64 {
    let z = q * s;
    if z.norm() < 1e-4 {
        let z2 = z * z;
        s * (1.0 - z2 / 6.0 + z2 * z2 / 120.0)
    } else {
        z.sin() / q
    }
}

/// cos(q s) and sin(q s)/q for real q^2, via cosh/sinh below the barrier top.
fn interior_basis(q2: f64, s: f64) -> (f64, f64) {
    let z2 = q2 * s * s;
    if z2.abs() < 1e-8 {
        return (1.0 - 0.5 * z2 + z2 * z2 / 24.0, s * (1.0 - z2 / 6.0 + z2 * z2 / 120.0));
    }
    if q2 > 0.0 {
        let q = q2.sqrt();
        let (sin, cos) = (q * s).sin_cos();
        (cos, sin / q)
    } else {
        let kappa = (-q2).sqrt();
        let z = kappa * s;
        (z.cosh(), z.sinh() / kappa)
    }
}

pub fn transmission_amplitude(k: f64, scen: &BarrierScenario, c: &PhysicalConstants) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    if scen.v0 == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let d = scen.width;
    let q2 = interior_q_squared(k, scen.v0, c);
    let phase = Complex64::from_polar(1.0, -k * d);
    if q2 == 0.0 {
        // E_k = V0 exactly: limit of the general form as q -> 0.
        return Ok(phase * 2.0 / Complex64::new(2.0, -k * d));
    }
    let q = Complex64::new(q2, 0.0).sqrt();
    // 2kq / (2kq cos(qd) - i(q^2 + k^2) sin(qd)), divided through by q.
    let denom = 2.0 * k * (q * d).cos() - I * (q2 + k * k) * sinc_q(q, d);
    Ok(phase * 2.0 * k / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringState {
    pub k: f64,
    pub q: Complex64,
    pub t: Complex64,
    pub r: Complex64,
    /// Interior coefficient of cos(q (x - d)).
    pub interior_cos: Complex64,
    /// Interior coefficient of sin(q (x - d))/q.
    pub interior_sin: Complex64,
    pub width: f64,
}

pub fn scattering_state(k: f64, scen: &BarrierScenario, c: &PhysicalConstants) -> Result<ScatteringState> {
    let t = transmission_amplitude(k, scen, c)?;
    let d = scen.width;
    let q = Complex64::new(interior_q_squared(k, scen.v0, c), 0.0).sqrt();
    // Value and slope of T e^{ikx} at x = d fix the interior solution.
    let at_d = t * Complex64::from_polar(1.0, k * d);
    let interior_cos = at_d;
    let interior_sin = I * k * at_d;
    let phi0 = interior_cos * (q * d).cos() - interior_sin * sinc_q(q, d);
    let r = phi0 - 1.0;
    Ok(ScatteringState {
        k,
        q,
        t,
        r,
        interior_cos,
        interior_sin,
        width: d,
    })
}

impl ScatteringState {
    /// Value and x-derivative of sqrt(2 pi) phi_k(x).
    pub fn phi_unnormalized(&self, x: f64) -> (Complex64, Complex64) {
        let k = self.k;
        if x < 0.0 {
            let e = Complex64::from_polar(1.0, k * x);
            let ec = e.conj();
            (e + self.r * ec, I * k * (e - self.r * ec))
        } else if x <= self.width {
            let q2 = (self.q * self.q).re;
            let (cos, sinc) = interior_basis(q2, x - self.width);
            (
                self.interior_cos * cos + self.interior_sin * sinc,
                self.interior_cos * (-q2 * sinc) + self.interior_sin * cos,
            )
        } else {
            let e = self.t * Complex64::from_polar(1.0, k * x);
            (e, I * k * e)
        }
    }

    pub fn phi(&self, x: f64) -> Complex64 {
        self.phi_unnormalized(x).0 * INV_SQRT_2PI
    }

    pub fn dphi(&self, x: f64) -> Complex64 {
        self.phi_unnormalized(x).1 * INV_SQRT_2PI
    }

    pub fn transmission_probability(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflection_probability(&self) -> f64 {
        self.r.norm_sqr()
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian momentum amplitude, including the e^{-i k x0} offset phase that
/// places the t = 0 packet at x0.
pub fn momentum_amplitude(k: f64, scen: &BarrierScenario) -> Complex64 {
    let s0 = scen.sigma0;
    let modulus = (2.0 * s0 * s0 / std::f64::consts::PI).powf(0.25) * (-(s0 * (k - scen.k0)).powi(2)).exp();
    Complex64::from_polar(modulus, -k * scen.x0)
}

#[derive(Clone, Debug)]
struct KNode {
    k: f64,
    /// E_k / hbar, 1/fs.
    omega: f64,
    /// Quadrature weight times momentum amplitude over sqrt(2 pi).
    coef: Complex64,
    state: ScatteringState,
}

/// The packet psi_x(x, t) synthesized from cached scattering states, plus the
/// free spreading Gaussians along y and z. Immutable once built.
#[derive(Clone, Debug)]
pub struct BarrierWave {
    scenario: BarrierScenario,
    constants: PhysicalConstants,
    nodes: Vec<KNode>,
    /// Set for the trapezoid rule: k_j = k_min + j * dk.
    uniform_step: Option<f64>,
    time_table: Option<Arc<TimeTable>>,
    /// Carrier wavenumber of the tabulated left envelopes.
    carrier: f64,
}

#[derive(Debug)]
struct TimeTable {
    step: f64,
    count: usize,
    /// Row i holds coef_j e^{-i omega_j i step}.
    coefs: Vec<Complex64>,
    /// psi_x and dpsi_x on [0, d].
    interior: ChebWindow,
    /// Envelopes A, A', B, B' of psi_x = e^{i k_c x} A + e^{-i k_c x} B on [lo, 0].
    left: ChebWindow,
}

/// Chebyshev coefficients on [lo, hi] at each tabulated time for a fixed set
/// of series that are linear in the node coefficients.
#[derive(Debug)]
struct ChebWindow {
    lo: f64,
    hi: f64,
    order: usize,
    series: usize,
    rows: Vec<Complex64>,
}

impl ChebWindow {
    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn sums(&self, i: usize, x: f64, out: &mut [Complex64]) {
        let m = self.order;
        let row = &self.rows[i * self.series * m..(i + 1) * self.series * m];
        let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        for (p, o) in out.iter_mut().enumerate().take(self.series) {
            *o = clenshaw(&row[p * m..(p + 1) * m], u);
        }
    }
}

/// Per-node Chebyshev coefficients of `series` functions on [lo, hi], laid
/// out as [node][series][order], with the zeroth coefficient halved.
fn chebyshev_basis<F>(nodes: &[KNode], lo: f64, hi: f64, m: usize, series: usize, f: F) -> Vec<Complex64>
where
    F: Fn(&KNode, f64, &mut [Complex64]),
{
    let angles: Vec<f64> = (0..m).map(|i| std::f64::consts::PI * (i as f64 + 0.5) / m as f64).collect();
    let xs: Vec<f64> = angles.iter().map(|a| 0.5 * (hi - lo) * a.cos() + 0.5 * (hi + lo)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); nodes.len() * series * m];
    let mut vals = vec![Complex64::new(0.0, 0.0); m * series];
    for (j, nd) in nodes.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            f(nd, x, &mut vals[i * series..(i + 1) * series]);
        }
        for p in 0..series {
            for order in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, a) in angles.iter().enumerate() {
                    acc += vals[i * series + p] * (order as f64 * a).cos();
                }
                let scale = if order == 0 { 1.0 } else { 2.0 } / m as f64;
                out[(j * series + p) * m + order] = acc * scale;
            }
        }
    }
    out
}

/// Row of window coefficients for one set of node coefficients.
fn window_row(basis: &[Complex64], c: &[Complex64], stride: usize, out: &mut Vec<Complex64>) {
    let start = out.len();
    out.resize(start + stride, Complex64::new(0.0, 0.0));
    let acc = &mut out[start..];
    for (j, &cj) in c.iter().enumerate() {
        for (a, &b) in acc.iter_mut().zip(&basis[j * stride..(j + 1) * stride]) {
            *a += cj * b;
        }
    }
}

/// Enough Chebyshev terms for a phase span of `span` radians over the window.
fn chebyshev_order(span: f64) -> usize {
    ((0.5 * span + 40.0).ceil() as usize).min(512)
}

/// Chebyshev series sum at u in [-1, 1], zeroth coefficient pre-halved.
fn clenshaw(a: &[Complex64], u: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in a[1..].iter().rev() {
        let b0 = c + b1 * (2.0 * u) - b2;
        b2 = b1;
        b1 = b0;
    }
    a[0] + b1 * u - b2
}

/// Re-seed the phase recurrence with an exact exponential this often.
const RECURRENCE_RESEED: usize = 32;

impl BarrierWave {
    pub fn new(scenario: BarrierScenario, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        scenario.validate()?;
        let g = scenario.kgrid;
        let (ks, ws) = rule_on_interval(g.rule, g.nodes, g.k_min, g.k_max)?;
        let nodes = ks
            .iter()
            .zip(&ws)
            .map(|(&k, &w)| {
                Ok(KNode {
                    k,
                    omega: constants.wavenumber_to_energy(k) / constants.hbar,
                    coef: momentum_amplitude(k, &scenario) * (w * INV_SQRT_2PI),
                    state: scattering_state(k, &scenario, &constants)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let uniform_step = match g.rule {
            QuadratureRule::Trapezoid => Some((g.k_max - g.k_min) / (g.nodes - 1) as f64),
            QuadratureRule::GaussLegendre => None,
        };
        Ok(BarrierWave {
            scenario,
            constants,
            nodes,
            uniform_step,
            time_table: None,
            carrier: 0.0,
        })
    }

    pub fn scenario(&self) -> &BarrierScenario {
        &self.scenario
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    /// The same wave on a grid with twice the node density.
    pub fn doubled(&self) -> Result<Self> {
        let mut s = self.scenario;
        s.kgrid = s.kgrid.doubled();
        BarrierWave::new(s, self.constants)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn states(&self) -> impl Iterator<Item = &ScatteringState> {
        self.nodes.iter().map(|n| &n.state)
    }

    /// k-space transmission probability, the integral of |T|^2 |psi~|^2.
    pub fn transmission_probability(&self) -> f64 {
        self.weighted_norm(|s| s.transmission_probability())
    }

    pub fn reflection_probability(&self) -> f64 {
        self.weighted_norm(|s| s.reflection_probability())
    }

    /// Integral of |psi~|^2 over the grid.
    pub fn momentum_norm(&self) -> f64 {
        self.weighted_norm(|_| 1.0)
    }

    fn weighted_norm(&self, f: impl Fn(&ScatteringState) -> f64) -> f64 {
        let (_, ws) = rule_on_interval(
            self.scenario.kgrid.rule,
            self.scenario.kgrid.nodes,
            self.scenario.kgrid.k_min,
            self.scenario.kgrid.k_max,
        )
        .expect("grid validated at construction");
        self.nodes
            .iter()
            .zip(ws)
            .map(|(n, w)| w * momentum_amplitude(n.k, &self.scenario).norm_sqr() * f(&n.state))
            .sum()
    }

    /// psi_x(x, t) and its x-derivative.
    pub fn eval_x(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        if let Some((tab, i)) = self.table_row(t) {
            let mut v = [Complex64::new(0.0, 0.0); 4];
            if tab.interior.contains(x) {
                tab.interior.sums(i, x, &mut v);
                return (v[0], v[1]);
            }
            if tab.left.contains(x) {
                tab.left.sums(i, x, &mut v);
                let k = self.carrier;
                let e = Complex64::from_polar(1.0, k * x);
                let (fwd, back) = (e * v[0], e.conj() * v[2]);
                return (fwd + back, e * (I * k * v[0] + v[1]) + e.conj() * (v[3] - I * k * v[2]));
            }
        }
        let mut buf = Vec::new();
        let c = self.time_coefficients(t, &mut buf);
        let d = self.scenario.width;
        if (0.0..=d).contains(&x) {
            return self.eval_interior(x, c);
        }
        match self.uniform_step {
            Some(dk) => self.eval_outside_uniform(x, c, dk),
            None => self.eval_outside_direct(x, c),
        }
    }

    pub fn psi_x(&self, x: f64, t: f64) -> Complex64 {
        self.eval_x(x, t).0
    }

    pub fn dpsi_x(&self, x: f64, t: f64) -> Complex64 {
        self.eval_x(x, t).1
    }

    /// Caches coef_j e^{-i omega_j t} for t = i * step, i < count, so that
    /// ensembles on a common time grid skip the per-node time phases.
    /// Returns the wave unchanged if the table would exceed `max_bytes`.
    pub fn with_time_table(mut self, step: f64, count: usize, max_bytes: usize) -> Self {
        let n = self.nodes.len();
        let d = self.scenario.width;
        let q_max = self.nodes.iter().map(|n| n.state.q.norm()).fold(0.0, f64::max);
        let m_in = chebyshev_order(q_max * d);
        let carrier = 0.5 * (self.nodes[0].k + self.nodes[n - 1].k);
        let dk_max = self.nodes.iter().map(|n| (n.k - carrier).abs()).fold(0.0, f64::max);
        let lo = self.scenario.x0 - 8.0 * self.scenario.sigma0;
        let m_left = chebyshev_order(dk_max * -lo.min(-1.0));
        let per_row = n + 2 * m_in + 4 * m_left;
        let bytes = count.saturating_mul(per_row).saturating_mul(std::mem::size_of::<Complex64>());
        if !(step > 0.0) || count == 0 || bytes > max_bytes || !(lo < 0.0) {
            return self;
        }
        let basis_in = chebyshev_basis(&self.nodes, 0.0, d, m_in, 2, |nd, x, out| {
            let (p, dp) = nd.state.phi_unnormalized(x);
            out[0] = p;
            out[1] = dp;
        });
        let basis_left = chebyshev_basis(&self.nodes, lo, 0.0, m_left, 4, |nd, x, out| {
            let dk = nd.k - carrier;
            let e = Complex64::from_polar(1.0, dk * x);
            let b = nd.state.r * e.conj();
            out[0] = e;
            out[1] = I * dk * e;
            out[2] = b;
            out[3] = -I * dk * b;
        });
        let mut coefs = Vec::with_capacity(count * n);
        let mut rows_in = Vec::with_capacity(count * 2 * m_in);
        let mut rows_left = Vec::with_capacity(count * 4 * m_left);
        for i in 0..count {
            let t = i as f64 * step;
            let start = coefs.len();
            coefs.extend(self.nodes.iter().map(|nd| nd.coef * Complex64::from_polar(1.0, -nd.omega * t)));
            window_row(&basis_in, &coefs[start..], 2 * m_in, &mut rows_in);
            window_row(&basis_left, &coefs[start..], 4 * m_left, &mut rows_left);
        }
        self.time_table = Some(Arc::new(TimeTable {
            step,
            count,
            coefs,
            interior: ChebWindow { lo: 0.0, hi: d, order: m_in, series: 2, rows: rows_in },
            left: ChebWindow { lo, hi: 0.0, order: m_left, series: 4, rows: rows_left },
        }));
        self.carrier = carrier;
        self
    }

    fn table_row(&self, t: f64) -> Option<(&TimeTable, usize)> {
        let tab = self.time_table.as_deref()?;
        let i = (t / tab.step).round();
        if i >= 0.0 && (i as usize) < tab.count && (t - i * tab.step).abs() <= 1e-12 * tab.step.max(t) {
            Some((tab, i as usize))
        } else {
            None
        }
    }

    pub fn has_time_table(&self) -> bool {
        self.time_table.is_some()
    }

    fn time_coefficients<'a>(&'a self, t: f64, buf: &'a mut Vec<Complex64>) -> &'a [Complex64] {
        if let Some((tab, i)) = self.table_row(t) {
            let n = self.nodes.len();
            return &tab.coefs[i * n..(i + 1) * n];
        }
        buf.clear();
        buf.extend(self.nodes.iter().map(|nd| nd.coef * Complex64::from_polar(1.0, -nd.omega * t)));
        buf
    }

    fn eval_interior(&self, x: f64, c: &[Complex64]) -> (Complex64, Complex64) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        for (n, &a) in self.nodes.iter().zip(c) {
            let (p, dp) = n.state.phi_unnormalized(x);
            psi += a * p;
            dpsi += a * dp;
        }
        (psi, dpsi)
    }

    fn eval_outside_direct(&self, x: f64, c: &[Complex64]) -> (Complex64, Complex64) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        let left = x < 0.0;
        for (n, &a) in self.nodes.iter().zip(c) {
            let k = n.k;
            let e = Complex64::from_polar(1.0, k * x);
            if left {
                let fwd = a * e;
                let back = a * n.state.r * e.conj();
                psi += fwd + back;
                dpsi += I * k * (fwd - back);
            } else {
                let v = a * n.state.t * e;
                psi += v;
                dpsi += I * k * v;
            }
        }
        (psi, dpsi)
    }

    /// Same sums as `eval_outside_direct`, with e^{i k_j x} advanced by a
    /// first-order recurrence over the uniform grid.
    fn eval_outside_uniform(&self, x: f64, c: &[Complex64], dk: f64) -> (Complex64, Complex64) {
        let k_a = self.nodes[0].k;
        let ratio = Complex64::from_polar(1.0, dk * x);
        let left = x < 0.0;
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        let mut e = Complex64::new(1.0, 0.0);
        for (j, (n, &a)) in self.nodes.iter().zip(c).enumerate() {
            if j % RECURRENCE_RESEED == 0 {
                e = Complex64::from_polar(1.0, (k_a + dk * j as f64) * x);
            }
            let k = n.k;
            if left {
                let fwd = a * e;
                let back = a * n.state.r * e.conj();
                psi += fwd + back;
                dpsi += I * k * (fwd - back);
            } else {
                let v = a * n.state.t * e;
                psi += v;
                dpsi += I * k * v;
            }
            e *= ratio;
        }
        (psi, dpsi)
    }

    /// Free spreading Gaussian shared by the y and z axes.
    pub fn transverse_gaussian(&self, y: f64, t: f64) -> AxisFactor {
        let s0 = self.scenario.sigma0;
        let rate = self.constants.hbar / (2.0 * self.constants.mass * s0 * s0);
        let st = Complex64::new(s0, s0 * rate * t);
        let denom = 2.0 * st * s0;
        let psi = st.sqrt().inv() * (2.0 * std::f64::consts::PI).powf(-0.25) * (-(y * y) / (2.0 * denom)).exp();
        AxisFactor::new(psi, psi * (-y / denom))
    }

    pub fn factorized_sample(&self, x: Vec3, t: f64) -> FactorizedWaveSample {
        let (psi, dpsi) = self.eval_x(x.x, t);
        FactorizedWaveSample {
            axes: [
                AxisFactor::new(psi, dpsi),
                self.transverse_gaussian(x.y, t),
                self.transverse_gaussian(x.z, t),
            ],
            position: x,
            time: t,
        }
    }

    /// Node-doubling check of psi_x at `x` over `times`. Returns the largest
    /// change relative to the peak |psi_x| seen on the series.
    pub fn doubling_error(&self, x: f64, times: &[f64]) -> Result<f64> {
        let fine = self.doubled()?;
        let mut peak: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for &t in times {
            let a = self.psi_x(x, t);
            let b = fine.psi_x(x, t);
            peak = peak.max(b.norm());
            worst = worst.max((a - b).norm());
        }
        if peak == 0.0 {
            return Ok(0.0);
        }
        Ok(worst / peak)
    }

    /// Doubles the node count until `doubling_error` drops below the
    /// tolerance, returning the converged wave.
    pub fn converged_at(&self, x: f64, times: &[f64]) -> Result<(Self, f64)> {
        let mut wave = self.clone();
        loop {
            let err = wave.doubling_error(x, times)?;
            if err < NODE_DOUBLING_TOL {
                return Ok((wave, err));
            }
            let next = wave.scenario.kgrid.doubled().nodes;
            if next > MAX_K_NODES {
                return Err(Error::Accuracy(format!(
                    "k quadrature not converged at x = {x} A: doubling {} nodes changes psi by {err:.3e} (tolerance {NODE_DOUBLING_TOL:.0e})",
                    wave.node_count()
                )));
            }
            wave = wave.doubled()?;
        }
    }
}
