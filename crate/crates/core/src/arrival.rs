//! Arrival-time distribution Pi(t) = |J(X, t)| / integral |J| at a fixed
//! detector point, and the mean arrival times with and without the spin term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{current_spin, current_spinless};
use crate::quadrature::simpson_weights;
use crate::scenario::{Scenario, ScenarioSpec};
use crate::vec3::Vec3;

/// Largest allowed share of either integral in the last tenth of the window.
pub const TAIL_TOL: f64 = 1e-4;
/// Fraction of the window treated as the tail.
pub const TAIL_FRACTION: f64 = 0.1;

/// `points` uniform samples on [0, t_max].
pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    let h = t_max / (points - 1) as f64;
    (0..points).map(|i| i as f64 * h).collect()
}

/// |J(X, t)| on `times`, with s_hat = z when `spin_on`.
pub fn current_magnitudes(scenario: &Scenario, detector: Vec3, times: &[f64], spin_on: bool) -> Vec<f64> {
    let c = *scenario.constants();
    times
        .par_iter()
        .map(|&t| {
            let w = scenario.wave_sample(detector, t);
            let j = if spin_on {
                current_spin(&w, Vec3::Z, &c)
            } else {
                current_spinless(&w, &c)
            };
            j.norm()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSeries {
    pub detector: Vec3,
    pub times: Vec<f64>,
    pub jmag_spin: Vec<f64>,
    pub jmag_spinless: Vec<f64>,
    pub t_max: f64,
    pub tail_bound: f64,
    pub converged: bool,
    /// k nodes of the barrier quadrature used, if any.
    pub k_nodes: Option<usize>,
}

impl ArrivalSeries {
    /// Both series on a uniform grid; `times` must start at 0 and be uniform.
    pub fn from_samples(detector: Vec3, times: Vec<f64>, jmag_spin: Vec<f64>, jmag_spinless: Vec<f64>) -> Result<Self> {
        check_grid(&times)?;
        if jmag_spin.len() != times.len() || jmag_spinless.len() != times.len() {
            return Err(Error::Input("series and time grid lengths differ".into()));
        }
        if jmag_spin.iter().chain(&jmag_spinless).any(|&v| !(v >= 0.0)) {
            return Err(Error::Input("|J| samples must be finite and nonnegative".into()));
        }
        let t_max = *times.last().unwrap();
        let mut s = ArrivalSeries {
            detector,
            times,
            jmag_spin,
            jmag_spinless,
            t_max,
            tail_bound: 0.0,
            converged: false,
            k_nodes: None,
        };
        s.tail_bound = s.compute_tail_bound();
        s.converged = s.tail_bound <= TAIL_TOL;
        Ok(s)
    }

    pub fn jmag(&self, spin_on: bool) -> &[f64] {
        if spin_on {
            &self.jmag_spin
        } else {
            &self.jmag_spinless
        }
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    fn compute_tail_bound(&self) -> f64 {
        let n = self.times.len();
        let start = ((1.0 - TAIL_FRACTION) * (n - 1) as f64).floor() as usize;
        let h = self.step();
        let mut worst: f64 = 0.0;
        for spin in [true, false] {
            let j = self.jmag(spin);
            let tj: Vec<f64> = j.iter().zip(&self.times).map(|(j, t)| j * t).collect();
            for f in [j, &tj[..]] {
                let total = integrate(f, h);
                let tail = integrate(&f[start..], h);
                let ratio = if total > 0.0 { tail / total } else { f64::INFINITY };
                worst = worst.max(ratio);
            }
        }
        worst
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.len() < 3 {
        return Err(Error::Input("time grid needs at least 3 points".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::Input("time grid must start at t = 0".into()));
    }
    let h = times[1] - times[0];
    let uniform = times
        .windows(2)
        .all(|w| w[1] > w[0] && ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(Error::Input("time grid must be uniform and increasing".into()));
    }
    Ok(())
}

/// Fixed-order composite Simpson sum.
fn integrate(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    simpson_weights(values.len(), h)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Evaluates both series at the detector on `times` with the given wave.
pub fn current_series(scenario: &Scenario, detector: Vec3, times: &[f64]) -> Result<ArrivalSeries> {
    check_grid(times)?;
    let spin = current_magnitudes(scenario, detector, times, true);
    let spinless = current_magnitudes(scenario, detector, times, false);
    let mut s = ArrivalSeries::from_samples(detector, times.to_vec(), spin, spinless)?;
    if let Scenario::Barrier(b) = scenario {
        s.k_nodes = Some(b.node_count());
    }
    Ok(s)
}

/// Pi(t) on the series grid.
pub fn arrival_distribution(s: &ArrivalSeries, spin_on: bool) -> Result<Vec<f64>> {
    let j = s.jmag(spin_on);
    let norm = integrate(j, s.step());
    if !(norm > 0.0) {
        return Err(Error::EmptyDistribution(format!(
            "|J| vanishes on [0, {}] fs at the detector",
            s.t_max
        )));
    }
    Ok(j.iter().map(|v| v / norm).collect())
}

/// Mean arrival time, the ratio of integral t |J| to integral |J|.
pub fn mean_arrival(s: &ArrivalSeries, spin_on: bool) -> Result<f64> {
    let j = s.jmag(spin_on);
    let h = s.step();
    let norm = integrate(j, h);
    if !(norm > 0.0) {
        return Err(Error::EmptyDistribution(format!(
            "|J| vanishes on [0, {}] fs at the detector",
            s.t_max
        )));
    }
    let tj: Vec<f64> = j.iter().zip(&s.times).map(|(j, t)| j * t).collect();
    Ok(integrate(&tj, h) / norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSettings {
    /// Initial window; `None` picks max(10 fs, 4 x transit time).
    pub t_max: Option<f64>,
    /// Samples on the initial window. The spacing is kept when the window grows.
    pub points: usize,
    /// How many times the window may be doubled.
    pub max_doublings: usize,
}

impl Default for SeriesSettings {
    fn default() -> Self {
        SeriesSettings {
            t_max: None,
            points: 4001,
            max_doublings: 10,
        }
    }
}

/// Straight-line time from the initial centre to the detector.
pub fn transit_time(scenario: &Scenario, detector: Vec3) -> f64 {
    (detector - scenario.initial_center()).norm() / scenario.group_speed()
}

/// The barrier k grid is refined on a subsample of this stride.
const K_CHECK_STRIDE: usize = 8;

/// Series whose window is doubled until the tail bound holds. For the
/// barrier, the k quadrature is refined on each window first.
pub fn adaptive_series(scenario: &Scenario, detector: Vec3, settings: &SeriesSettings) -> Result<ArrivalSeries> {
    if settings.points < 3 {
        return Err(Error::Input("series needs at least 3 points".into()));
    }
    let mut t_max = settings
        .t_max
        .unwrap_or_else(|| (4.0 * transit_time(scenario, detector)).max(10.0));
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Input(format!("t_max must be positive, got {t_max}")));
    }
    let mut points = settings.points;
    let mut wave = scenario.clone();
    let mut doublings = 0;
    loop {
        let times = uniform_grid(t_max, points);
        if let Scenario::Barrier(b) = &wave {
            let check: Vec<f64> = times.iter().step_by(K_CHECK_STRIDE).copied().collect();
            let (fine, _) = b.converged_at(detector.x, &check)?;
            wave = Scenario::Barrier(fine);
        }
        let s = current_series(&wave, detector, &times)?;
        if s.converged || doublings >= settings.max_doublings {
            return Ok(s);
        }
        t_max *= 2.0;
        points = 2 * (points - 1) + 1;
        doublings += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSummary {
    pub tau: f64,
    pub tau_i: f64,
    pub delta: f64,
    pub tail_bound: f64,
    pub converged: bool,
    pub t_max: f64,
    pub points: usize,
    pub k_nodes: Option<usize>,
}

pub fn summarize(s: &ArrivalSeries) -> Result<ArrivalSummary> {
    let tau = mean_arrival(s, true)?;
    let tau_i = mean_arrival(s, false)?;
    Ok(ArrivalSummary {
        tau,
        tau_i,
        delta: tau - tau_i,
        tail_bound: s.tail_bound,
        converged: s.converged,
        t_max: s.t_max,
        points: s.times.len(),
        k_nodes: s.k_nodes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Mass in units of the electron mass, at fixed E0.
    Mass,
    /// u / c, setting E0 = m u^2 / 2.
    GroupSpeed,
    /// Barrier width d, A.
    BarrierWidth,
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mass" => Ok(SweepParameter::Mass),
            "group_speed" | "u_over_c" => Ok(SweepParameter::GroupSpeed),
            "barrier_width" | "width" | "d" => Ok(SweepParameter::BarrierWidth),
            other => Err(format!("unknown sweep parameter '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: ArrivalSummary,
    pub warnings: Vec<String>,
}

/// Spec with the swept parameter set to `value`.
pub fn apply_sweep_value(spec: &ScenarioSpec, parameter: SweepParameter, value: f64) -> Result<ScenarioSpec> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Input(format!("sweep value must be positive, got {value}")));
    }
    let mut s = *spec;
    match parameter {
        SweepParameter::Mass => *s.mass_factor_mut() = value,
        SweepParameter::GroupSpeed => {
            let c = s.constants();
            *s.energy_mut() = c.energy_for_speed(value * c.light_speed);
        }
        SweepParameter::BarrierWidth => match &mut s {
            ScenarioSpec::Barrier(b) => b.width = value,
            ScenarioSpec::UniformField(_) => {
                return Err(Error::Input("barrier_width sweep needs the barrier scenario".into()))
            }
        },
    }
    Ok(s)
}

/// Lowest transmission probability for which a barrier row is not flagged.
pub const MIN_TRANSMISSION: f64 = 1e-3;

pub fn sweep(
    parameter: SweepParameter,
    values: &[f64],
    spec: &ScenarioSpec,
    detector: Vec3,
    settings: &SeriesSettings,
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let row_spec = apply_sweep_value(spec, parameter, value)?;
            let scenario = row_spec.build()?;
            let mut warnings = Vec::new();
            if let Scenario::Barrier(b) = &scenario {
                let p = b.transmission_probability();
                if p < MIN_TRANSMISSION {
                    warnings.push(format!("transmission probability {p:.3e} is too small for arrivals"));
                }
            }
            let series = adaptive_series(&scenario, detector, settings)?;
            let summary = summarize(&series)?;
            if !summary.converged {
                warnings.push(format!("tail bound {:.3e} above {TAIL_TOL:.0e}", summary.tail_bound));
            }
            Ok(SweepRow {
                value,
                summary,
                warnings,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::UniformFieldSpec;

    fn reference_uniform() -> Scenario {
        ScenarioSpec::UniformField(UniformFieldSpec::default()).build().unwrap()
    }

    const DETECTOR: Vec3 = Vec3 { x: 20.0, y: 20.0, z: 20.0 };

    #[test]
    fn on_axis_peak_near_transit_time() {
        let s = reference_uniform();
        let d = Vec3::new(20.0, 0.0, 0.0);
        let times = uniform_grid(6.0, 6001);
        let j = current_magnitudes(&s, d, &times, false);
        let (imax, _) = j.iter().enumerate().fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        let transit = 20.0 / s.group_speed();
        assert!((transit - 1.51).abs() < 0.01);
        assert!((times[imax] - transit).abs() < 0.15 * transit);
    }

    #[test]
    fn spinless_on_axis_has_no_transverse_current() {
        let s = reference_uniform();
        let c = *s.constants();
        for t in [0.3, 1.0, 2.5] {
            let w = s.wave_sample(Vec3::new(20.0, 0.0, 0.0), t);
            let j = current_spinless(&w, &c);
            assert_eq!(j.y, 0.0);
        }
    }

    #[test]
    fn global_phase_leaves_series_unchanged() {
        let s = reference_uniform();
        let c = *s.constants();
        for t in [0.5, 1.5, 3.0] {
            let w = s.wave_sample(DETECTOR, t);
            let rotated = w.with_phase(1.234);
            for spin in [true, false] {
                let (a, b) = if spin {
                    (current_spin(&w, Vec3::Z, &c), current_spin(&rotated, Vec3::Z, &c))
                } else {
                    (current_spinless(&w, &c), current_spinless(&rotated, &c))
                };
                assert!((a.norm() - b.norm()).abs() <= 1e-14 * a.norm());
            }
        }
    }

    fn synthetic(shape: impl Fn(f64) -> f64, t_max: f64, n: usize) -> ArrivalSeries {
        let times = uniform_grid(t_max, n);
        let j: Vec<f64> = times.iter().map(|&t| shape(t)).collect();
        ArrivalSeries::from_samples(Vec3::ZERO, times, j.clone(), j).unwrap()
    }

    #[test]
    fn distribution_normalized_and_scale_free() {
        let s = synthetic(|t| (-(t - 5.0).powi(2)).exp(), 10.0, 1001);
        let pi = arrival_distribution(&s, true).unwrap();
        assert!(pi.iter().all(|&p| p >= 0.0));
        assert!((integrate(&pi, s.step()) - 1.0).abs() < 1e-12);
        let mut scaled = s.clone();
        scaled.jmag_spin.iter_mut().for_each(|v| *v *= 8.0);
        assert_eq!(arrival_distribution(&scaled, true).unwrap(), pi);
        assert!((mean_arrival(&s, true).unwrap() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn delta_like_series_gives_its_peak() {
        let times = uniform_grid(10.0, 1001);
        let mut j = vec![0.0; 1001];
        j[437] = 1.0;
        let s = ArrivalSeries::from_samples(Vec3::ZERO, times.clone(), j.clone(), j).unwrap();
        assert!((mean_arrival(&s, true).unwrap() - times[437]).abs() <= s.step());
    }

    #[test]
    fn zero_series_is_an_error() {
        let s = synthetic(|_| 0.0, 1.0, 11);
        assert!(matches!(arrival_distribution(&s, false), Err(Error::EmptyDistribution(_))));
        assert!(matches!(mean_arrival(&s, false), Err(Error::EmptyDistribution(_))));
        assert!(!s.converged);
    }

    #[test]
    fn tail_bound_flags_slow_decay() {
        let fast = synthetic(|t| (-(t - 2.0).powi(2)).exp(), 10.0, 1001);
        assert!(fast.converged && fast.tail_bound < 1e-12);
        let slow = synthetic(|t| 1.0 / (1.0 + t * t), 10.0, 1001);
        assert!(!slow.converged);
    }

    #[test]
    fn bad_grids_rejected() {
        let j = vec![1.0; 4];
        assert!(ArrivalSeries::from_samples(Vec3::ZERO, vec![0.1, 0.2, 0.3, 0.4], j.clone(), j.clone()).is_err());
        assert!(ArrivalSeries::from_samples(Vec3::ZERO, vec![0.0, 0.1, 0.3, 0.4], j.clone(), j.clone()).is_err());
        assert!(ArrivalSeries::from_samples(Vec3::ZERO, vec![0.0, 0.1, 0.2, 0.3], vec![-1.0; 4], j).is_err());
    }

    #[test]
    fn mirror_symmetry_under_spin_flip() {
        // Flipping s_hat and mirroring y maps the spin series onto itself.
        let s = reference_uniform();
        let c = *s.constants();
        let mirrored = Vec3::new(DETECTOR.x, -DETECTOR.y, DETECTOR.z);
        for t in uniform_grid(5.0, 51) {
            let a = current_spin(&s.wave_sample(DETECTOR, t), Vec3::Z, &c).norm();
            let b = current_spin(&s.wave_sample(mirrored, t), -Vec3::Z, &c).norm();
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn sweep_value_mapping() {
        let spec = ScenarioSpec::UniformField(UniformFieldSpec::default());
        let s = apply_sweep_value(&spec, SweepParameter::GroupSpeed, 0.002).unwrap();
        let u = s.group_speed().unwrap();
        assert!((u / s.constants().light_speed - 0.002).abs() < 1e-14);
        let m = apply_sweep_value(&spec, SweepParameter::Mass, 2.0).unwrap();
        assert!((m.constants().mass / spec.constants().mass - 2.0).abs() < 1e-15);
        assert!(apply_sweep_value(&spec, SweepParameter::BarrierWidth, 5.0).is_err());
        assert!(apply_sweep_value(&spec, SweepParameter::Mass, -1.0).is_err());
    }
}
