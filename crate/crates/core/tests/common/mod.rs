#![allow(dead_code)]

use num_complex::Complex64;
use spintime::barrier::BarrierScenario;
use spintime::guidance::{current_spin, current_spinless, spin_current_term};
use spintime::scenario::{BarrierSpec, Scenario, ScenarioSpec, UniformFieldSpec};
use spintime::{PhysicalConstants, Vec3};

pub fn uniform_spec() -> ScenarioSpec {
    ScenarioSpec::UniformField(UniformFieldSpec::default())
}

pub fn barrier_spec() -> ScenarioSpec {
    ScenarioSpec::Barrier(BarrierSpec::default())
}

pub fn uniform() -> Scenario {
    uniform_spec().build().unwrap()
}

pub fn barrier() -> Scenario {
    barrier_spec().build().unwrap()
}

pub fn barrier_params(s: &Scenario) -> BarrierScenario {
    match s {
        Scenario::Barrier(b) => *b.scenario(),
        _ => panic!("not a barrier scenario"),
    }
}

type M2 = [[Complex64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn inv(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// Columns are e^{+i kappa x} and e^{-i kappa x}; rows are value and slope.
fn plane_waves(kappa: Complex64, x: f64) -> M2 {
    let i = Complex64::i();
    let e = (i * kappa * x).exp();
    let ei = (-i * kappa * x).exp();
    [[e, ei], [i * kappa * e, -i * kappa * ei]]
}

/// Transmission and reflection amplitudes for a wave e^{ikx} incident from
/// the left on constant layers `(x_start, x_end, V)`, by transfer matrices.
/// The transmitted wave is t e^{ikx} and the reflected one r e^{-ikx}.
pub fn transfer_matrix(k: f64, layers: &[(f64, f64, f64)], c: &PhysicalConstants) -> (Complex64, Complex64) {
    let energy = c.kinetic_scale() * k * k;
    let kappa = |v: f64| (Complex64::new((energy - v) / c.kinetic_scale(), 0.0)).sqrt();
    let mut regions = vec![0.0];
    let mut walls = Vec::new();
    for &(a, b, v) in layers {
        walls.push(a);
        regions.push(v);
        walls.push(b);
        regions.push(0.0);
    }
    let mut m = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    for (j, &x) in walls.iter().enumerate() {
        let left = plane_waves(kappa(regions[j]), x);
        let right = plane_waves(kappa(regions[j + 1]), x);
        m = mul(&m, &mul(&inv(&left), &right));
    }
    let t = Complex64::new(1.0, 0.0) / m[0][0];
    (t, m[1][0] * t)
}

/// Gaussian momentum weight |psi~(k)|^2.
pub fn momentum_density(k: f64, k0: f64, sigma0: f64) -> f64 {
    (2.0 * sigma0 * sigma0 / std::f64::consts::PI).sqrt() * (-2.0 * (sigma0 * (k - k0)).powi(2)).exp()
}

/// int |T(k)|^2 |psi~(k)|^2 dk by composite Simpson with the transfer-matrix T.
pub fn transmission_oracle(s: &BarrierScenario, c: &PhysicalConstants, intervals: usize) -> f64 {
    let half = 10.0 / (2.0 * s.sigma0);
    let (a, b) = ((s.k0 - half).max(1e-6), s.k0 + half);
    let h = (b - a) / intervals as f64;
    let f = |k: f64| transfer_matrix(k, &[(0.0, s.width, s.v0)], c).0.norm_sqr() * momentum_density(k, s.k0, s.sigma0);
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Fourth-order central difference.
pub fn d5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn axis(v: Vec3, i: usize) -> f64 {
    v.to_array()[i]
}

fn shifted(x: Vec3, i: usize, h: f64) -> Vec3 {
    let mut a = x.to_array();
    a[i] += h;
    Vec3::new(a[0], a[1], a[2])
}

/// Finite-difference divergence of a vector field.
pub fn divergence<F: Fn(Vec3) -> Vec3>(field: F, x: Vec3, h: f64) -> f64 {
    (0..3).map(|i| d5(|s| axis(field(shifted(x, i, s)), i), 0.0, h)).sum()
}

/// Largest |d rho/dt + div J| over the sample points, and max |div J|.
pub fn continuity_residual(
    s: &Scenario,
    points: &[(Vec3, f64)],
    spin: Option<Vec3>,
    hx: f64,
    ht: f64,
) -> (f64, f64) {
    let c = *s.constants();
    let current = |x: Vec3, t: f64| {
        let w = s.wave_sample(x, t);
        match spin {
            Some(sh) => current_spin(&w, sh, &c),
            None => current_spinless(&w, &c),
        }
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(x, t) in points {
        let drho = d5(|tt| s.wave_sample(x, tt).density(), t, ht);
        let div = divergence(|y| current(y, t), x, hx);
        worst = worst.max((drho + div).abs());
        scale = scale.max(div.abs());
    }
    (worst, scale)
}

/// Largest |div J_s| and largest |J_s| over the points.
pub fn spin_divergence(s: &Scenario, points: &[(Vec3, f64)], h: f64) -> (f64, f64) {
    let c = *s.constants();
    let js = |x: Vec3, t: f64| spin_current_term(&s.wave_sample(x, t), Vec3::Z, &c);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(x, t) in points {
        worst = worst.max(divergence(|y| js(y, t), x, h).abs());
        scale = scale.max(js(x, t).norm());
    }
    (worst, scale)
}

/// Lattice of points `centre + (i, j, l) * spacing` for |i|, |j|, |l| <= half.
pub fn lattice(centre: Vec3, spacing: Vec3, half: i32) -> Vec<Vec3> {
    let mut v = Vec::new();
    for i in -half..=half {
        for j in -half..=half {
            for l in -half..=half {
                v.push(centre + Vec3::new(i as f64 * spacing.x, j as f64 * spacing.y, l as f64 * spacing.z));
            }
        }
    }
    v
}

/// Continuity sample points for the uniform-field packet around its centre.
pub fn uniform_points(s: &Scenario) -> Vec<(Vec3, f64)> {
    let Scenario::UniformField(p) = s else { panic!("not uniform") };
    let mut out = Vec::new();
    for t in [0.0, 0.7, 2.0, 5.0] {
        let w = p.spread(t);
        for x in lattice(p.center(t), Vec3::new(0.8 * w, 0.8 * w, 0.8 * w), 2) {
            out.push((x, t));
        }
    }
    out
}

/// Continuity sample points in front of, inside and behind the barrier while
/// the packet hits it.
pub fn barrier_points(s: &Scenario) -> Vec<(Vec3, f64)> {
    let b = barrier_params(s);
    let mut out = Vec::new();
    for t in [0.5, 2.2, 2.9, 3.6] {
        for i in 0..13 {
            let x = -30.0 + i as f64 * 4.7 * b.width / 10.0;
            for (y, z) in [(0.0, 0.0), (-4.0, 2.5), (6.0, -7.0)] {
                out.push((Vec3::new(x, y, z), t));
            }
        }
    }
    out
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
