//! Fixed-step RK4 integration of the guidance equation dx/dt = v(x, t).
//!
//! Paths are integrated on the grid t_n = n dt so that every path of an
//! ensemble shares the same sample times. Events (detector crossing, barrier
//! entry and exit) are located inside a step with the cubic Hermite
//! interpolant built from the positions and velocities at both ends.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::vec3::Vec3;

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<F>(x: Vec3, t: f64, dt: f64, field: F) -> Result<Vec3>
where
    F: Fn(Vec3, f64) -> Result<Vec3>,
{
    let k1 = field(x, t)?;
    rk4_step_with(x, t, dt, k1, &field)
}

/// RK4 step reusing an already evaluated k1 = v(x, t).
fn rk4_step_with<F>(x: Vec3, t: f64, dt: f64, k1: Vec3, field: &F) -> Result<Vec3>
where
    F: Fn(Vec3, f64) -> Result<Vec3>,
{
    let h2 = 0.5 * dt;
    let k2 = field(x + k1 * h2, t + h2)?;
    let k3 = field(x + k2 * h2, t + h2)?;
    let k4 = field(x + k3 * dt, t + dt)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DetectorMode {
    /// Crossing of the plane x = detector.x.
    PlaneX,
    /// Entry into the ball of the given radius around the detector point.
    Sphere { radius: f64 },
}

pub const DEFAULT_DT: f64 = 5e-4;
/// Barrier ensembles: no fate changes against dt = 0.005 on 400 paths.
pub const BARRIER_DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_SPHERE_RADIUS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    pub detector: Vec3,
    pub detector_mode: DetectorMode,
    /// Store every `store_stride`-th step (the last state is always stored).
    pub store_stride: usize,
    /// End each path at its first detector crossing.
    pub stop_at_detector: bool,
    /// End a path once it crosses this plane moving in -x. Used for barrier
    /// ensembles, where nothing flows back from far left of the packet.
    pub left_stop_plane: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: DEFAULT_DT,
            t_max: 10.0,
            detector: Vec3::new(20.0, 20.0, 20.0),
            detector_mode: DetectorMode::PlaneX,
            store_stride: 1,
            stop_at_detector: true,
            left_stop_plane: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Input(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Input(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.store_stride < 1 {
            return Err(Error::Input("store_stride must be >= 1".into()));
        }
        if let DetectorMode::Sphere { radius } = self.detector_mode {
            if !(radius > 0.0) {
                return Err(Error::Input(format!("sphere radius must be positive, got {radius}")));
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Signed distance to the detector surface; event when it changes sign.
    fn detector_level(&self, x: Vec3) -> f64 {
        match self.detector_mode {
            DetectorMode::PlaneX => x.x - self.detector.x,
            DetectorMode::Sphere { radius } => radius - (x - self.detector).norm(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DetectorCrossing,
    BarrierEntry,
    BarrierExit,
    NodeAbort,
    TMaxReached,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub kind: EventKind,
    pub time: f64,
    pub position: Vec3,
    /// +1 for an upward crossing of the level function, -1 for downward.
    pub direction: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPath {
    pub id: usize,
    pub spin_on: bool,
    pub initial: Vec3,
    pub samples: Vec<PathSample>,
    pub events: Vec<PathEvent>,
}

impl TrajectoryPath {
    pub fn last(&self) -> PathSample {
        *self.samples.last().expect("paths always hold the initial sample")
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&PathEvent> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn reached_detector(&self) -> bool {
        self.first_event(EventKind::DetectorCrossing).is_some()
    }

    pub fn aborted(&self) -> bool {
        self.first_event(EventKind::NodeAbort).is_some()
    }

    /// Position at time t by linear interpolation between stored samples.
    pub fn position_at(&self, t: f64) -> Option<Vec3> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let i = s.partition_point(|p| p.t <= t);
        if i == 0 {
            return Some(s[0].position);
        }
        if i == s.len() {
            return Some(s[s.len() - 1].position);
        }
        let (a, b) = (s[i - 1], s[i]);
        let f = (t - a.t) / (b.t - a.t);
        Some(a.position + (b.position - a.position) * f)
    }
}

/// Cubic Hermite interpolant on [t0, t0 + h].
fn hermite(p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3, h: f64, s: f64) -> Vec3 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    p0 * h00 + v0 * (h10 * h) + p1 * h01 + v1 * (h11 * h)
}

/// Root of `level` along the Hermite interpolant, assuming a sign change.
fn refine_event<G: Fn(Vec3) -> f64>(
    level: G,
    t0: f64,
    h: f64,
    ends: (Vec3, Vec3, Vec3, Vec3),
) -> (f64, Vec3) {
    let (p0, v0, p1, v1) = ends;
    let g0 = level(p0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let g = level(hermite(p0, v0, p1, v1, h, mid));
        if (g >= 0.0) == (g0 >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    (t0 + s * h, hermite(p0, v0, p1, v1, h, s))
}

/// Integrates one path from `x0` at t = 0.
pub fn integrate_path(
    x0: Vec3,
    scenario: &Scenario,
    spin_on: bool,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryPath> {
    integrate_path_with_id(0, x0, scenario, spin_on, cfg)
}

fn integrate_path_with_id(
    id: usize,
    x0: Vec3,
    scenario: &Scenario,
    spin_on: bool,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryPath> {
    cfg.validate()?;
    let field = |x: Vec3, t: f64| scenario.velocity(x, t, spin_on);
    let barrier = scenario.barrier_width();
    let barrier_level = |x: Vec3| -> f64 {
        // Positive inside [0, d].
        let d = barrier.unwrap_or(0.0);
        (x.x).min(d - x.x)
    };

    let mut path = TrajectoryPath {
        id,
        spin_on,
        initial: x0,
        samples: vec![PathSample { t: 0.0, position: x0 }],
        events: Vec::new(),
    };
    let steps = cfg.steps();
    let mut x = x0;
    let mut t = 0.0;
    let mut v = match field(x, t) {
        Ok(v) => v,
        Err(Error::Node { .. }) => {
            path.events.push(PathEvent {
                kind: EventKind::NodeAbort,
                time: 0.0,
                position: x0,
                direction: 0,
            });
            return Ok(path);
        }
        Err(e) => return Err(e),
    };
    let mut seen_up = false;
    let mut seen_down = false;

    for n in 1..=steps {
        let t_next = (n as f64 * cfg.dt).min(cfg.t_max);
        let h = t_next - t;
        let step = rk4_step_with(x, t, h, v, &field).and_then(|xn| Ok((xn, field(xn, t_next)?)));
        let (x_next, v_next) = match step {
            Ok(s) => s,
            Err(Error::Node { .. }) => {
                path.events.push(PathEvent {
                    kind: EventKind::NodeAbort,
                    time: t,
                    position: x,
                    direction: 0,
                });
                if path.last().t < t {
                    path.samples.push(PathSample { t, position: x });
                }
                return Ok(path);
            }
            Err(e) => return Err(e),
        };
        let ends = (x, v, x_next, v_next);

        if barrier.is_some() {
            let (a, b) = (barrier_level(x), barrier_level(x_next));
            if (a < 0.0) != (b < 0.0) {
                let (te, pe) = refine_event(barrier_level, t, h, ends);
                let kind = if b >= 0.0 {
                    EventKind::BarrierEntry
                } else {
                    EventKind::BarrierExit
                };
                path.events.push(PathEvent {
                    kind,
                    time: te,
                    position: pe,
                    direction: if b >= 0.0 { 1 } else { -1 },
                });
            }
        }

        let (a, b) = (cfg.detector_level(x), cfg.detector_level(x_next));
        let mut stop = false;
        if (a < 0.0) != (b < 0.0) {
            let up = b >= 0.0;
            if (up && !seen_up) || (!up && !seen_down) {
                let (te, pe) = refine_event(|p| cfg.detector_level(p), t, h, ends);
                path.events.push(PathEvent {
                    kind: EventKind::DetectorCrossing,
                    time: te,
                    position: pe,
                    direction: if up { 1 } else { -1 },
                });
                if up {
                    seen_up = true;
                } else {
                    seen_down = true;
                }
                stop = up && cfg.stop_at_detector;
            }
        }

        if let Some(plane) = cfg.left_stop_plane {
            if x.x >= plane && x_next.x < plane {
                stop = true;
            }
        }

        x = x_next;
        v = v_next;
        t = t_next;
        if stop || n % cfg.store_stride == 0 || n == steps {
            path.samples.push(PathSample { t, position: x });
        }
        if stop {
            return Ok(path);
        }
    }
    path.events.push(PathEvent {
        kind: EventKind::TMaxReached,
        time: t,
        position: x,
        direction: 0,
    });
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Ordering of x at equal times flips.
    Xt,
    /// The (x, y) curves of the two paths intersect (not necessarily at equal times).
    Xy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Crossing time (for the xy projection, the time on the first path).
    pub time: f64,
    pub position_a: Vec3,
    pub position_b: Vec3,
    /// |y_a - y_b| at the crossing.
    pub y_separation: f64,
}

/// Samples of `b` evaluated at the sample times of `a` inside the common range.
fn aligned(a: &TrajectoryPath, b: &TrajectoryPath) -> Vec<(f64, Vec3, Vec3)> {
    a.samples
        .iter()
        .filter_map(|s| b.position_at(s.t).map(|pb| (s.t, s.position, pb)))
        .collect()
}

pub fn detect_projection_crossings(
    a: &TrajectoryPath,
    b: &TrajectoryPath,
    projection: Projection,
) -> Vec<Crossing> {
    match projection {
        Projection::Xt => xt_crossings(a, b),
        Projection::Xy => xy_crossings(a, b),
    }
}

fn xt_crossings(a: &TrajectoryPath, b: &TrajectoryPath) -> Vec<Crossing> {
    let pts = aligned(a, b);
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (t0, a0, b0) = w[0];
        let (t1, a1, b1) = w[1];
        let d0 = a0.x - b0.x;
        let d1 = a1.x - b1.x;
        if d0 != 0.0 && (d0 < 0.0) != (d1 < 0.0) {
            let f = d0 / (d0 - d1);
            let pa = a0 + (a1 - a0) * f;
            let pb = b0 + (b1 - b0) * f;
            out.push(Crossing {
                time: t0 + f * (t1 - t0),
                position_a: pa,
                position_b: pb,
                y_separation: (pa.y - pb.y).abs(),
            });
        }
    }
    out
}

fn segment_intersection(p: (f64, f64), p2: (f64, f64), q: (f64, f64), q2: (f64, f64)) -> Option<(f64, f64)> {
    let r = (p2.0 - p.0, p2.1 - p.1);
    let s = (q2.0 - q.0, q2.1 - q.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let qp = (q.0 - p.0, q.1 - p.1);
    let u = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let v = (qp.0 * r.1 - qp.1 * r.0) / denom;
    if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) {
        Some((u, v))
    } else {
        None
    }
}

fn xy_crossings(a: &TrajectoryPath, b: &TrajectoryPath) -> Vec<Crossing> {
    // Sweep over segments sorted by their lower x bound.
    let segs = |p: &TrajectoryPath| -> Vec<(f64, f64, usize)> {
        let mut v: Vec<_> = p
            .samples
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (x0, x1) = (w[0].position.x, w[1].position.x);
                (x0.min(x1), x0.max(x1), i)
            })
            .collect();
        v.sort_by(|l, r| l.0.total_cmp(&r.0));
        v
    };
    let sa = segs(a);
    let sb = segs(b);
    let mut out = Vec::new();
    let mut start = 0;
    for &(lo, hi, i) in &sa {
        while start < sb.len() && sb[start].0 < lo - max_span(&sb) {
            start += 1;
        }
        for &(blo, bhi, j) in &sb[start..] {
            if blo > hi {
                break;
            }
            if bhi < lo {
                continue;
            }
            let (pa0, pa1) = (a.samples[i], a.samples[i + 1]);
            let (pb0, pb1) = (b.samples[j], b.samples[j + 1]);
            if let Some((u, v)) = segment_intersection(
                (pa0.position.x, pa0.position.y),
                (pa1.position.x, pa1.position.y),
                (pb0.position.x, pb0.position.y),
                (pb1.position.x, pb1.position.y),
            ) {
                let pa = pa0.position + (pa1.position - pa0.position) * u;
                let pb = pb0.position + (pb1.position - pb0.position) * v;
                out.push(Crossing {
                    time: pa0.t + u * (pa1.t - pa0.t),
                    position_a: pa,
                    position_b: pb,
                    y_separation: (pa.y - pb.y).abs(),
                });
            }
        }
    }
    out.sort_by(|l, r| l.time.total_cmp(&r.time));
    out
}

fn max_span(segs: &[(f64, f64, usize)]) -> f64 {
    segs.iter().map(|s| s.1 - s.0).fold(0.0, f64::max)
}

/// Number of sign flips of (a - b) per coordinate axis over common sample times.
pub fn axis_reorderings(a: &TrajectoryPath, b: &TrajectoryPath) -> [usize; 3] {
    let pts = aligned(a, b);
    let mut flips = [0usize; 3];
    for axis in 0..3 {
        let mut prev = 0.0f64;
        for &(_, pa, pb) in &pts {
            let d = pa[axis] - pb[axis];
            if d != 0.0 {
                if prev != 0.0 && (prev < 0.0) != (d < 0.0) {
                    flips[axis] += 1;
                }
                prev = d;
            }
        }
    }
    flips
}

/// Smallest 3D distance between two paths at common sample times.
pub fn min_separation(a: &TrajectoryPath, b: &TrajectoryPath) -> f64 {
    aligned(a, b)
        .iter()
        .map(|(_, pa, pb)| (*pa - *pb).norm())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFate {
    /// Barrier: ended right of the barrier. Uniform field: reached the detector.
    Transmitted,
    /// Barrier: ended left of the barrier. Uniform field: never reached the detector.
    Reflected,
    /// Barrier only: still inside [0, d] at t_max.
    InBarrier,
    Aborted,
}

pub fn classify(path: &TrajectoryPath, scenario: &Scenario, cfg: &IntegratorConfig) -> PathFate {
    if path.aborted() {
        return PathFate::Aborted;
    }
    match scenario.barrier_width() {
        None => {
            if path.reached_detector() {
                PathFate::Transmitted
            } else {
                PathFate::Reflected
            }
        }
        Some(d) => {
            let detector_beyond = cfg.detector_mode == DetectorMode::PlaneX && cfg.detector.x > d;
            if detector_beyond && path.reached_detector() {
                return PathFate::Transmitted;
            }
            let x = path.last().position.x;
            if x > d {
                PathFate::Transmitted
            } else if x < 0.0 {
                PathFate::Reflected
            } else {
                PathFate::InBarrier
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPair {
    pub path_i: usize,
    pub path_j: usize,
    pub projection: Projection,
    pub time: f64,
    pub y_separation: f64,
}

/// Ensembles larger than this skip the all-pairs crossing scan.
pub const CROSSING_SCAN_LIMIT: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub paths: Vec<TrajectoryPath>,
    pub fates: Vec<PathFate>,
    pub transmitted_fraction: f64,
    pub reflected_fraction: f64,
    /// Node aborts plus paths left inside the barrier at t_max.
    pub aborted_fraction: f64,
    pub in_barrier_count: usize,
    pub crossing_pairs: Vec<CrossingPair>,
    pub crossing_scan_done: bool,
    pub seed: u64,
    pub spin_on: bool,
    pub warnings: Vec<String>,
}

/// Draws the initial position of path `id` from rho(., 0). Each path owns a
/// ChaCha stream keyed by its id, so the mapping does not depend on how the
/// work is partitioned.
pub fn initial_position(scenario: &Scenario, seed: u64, id: usize) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    let s = scenario.sigma0();
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let offset = Vec3::new(draw(), draw(), draw());
    scenario.initial_center() + offset * s
}

/// Smaller ensembles do not repay the cost of tabulating the barrier wave.
pub const TABLE_MIN_PATHS: usize = 32;

pub fn run_ensemble(
    scenario: &Scenario,
    spin_on: bool,
    cfg: &IntegratorConfig,
    n: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if n < 1 {
        return Err(Error::Input("ensemble needs at least one path".into()));
    }
    cfg.validate()?;
    // RK4 stages sit on multiples of dt/2.
    let field = if n >= TABLE_MIN_PATHS {
        scenario.with_time_table(0.5 * cfg.dt, 2 * cfg.steps() + 1)
    } else {
        scenario.clone()
    };
    let paths = (0..n)
        .into_par_iter()
        .map(|id| integrate_path_with_id(id, initial_position(scenario, seed, id), &field, spin_on, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_ensemble(paths, scenario, cfg, seed, spin_on))
}

fn summarize_ensemble(
    paths: Vec<TrajectoryPath>,
    scenario: &Scenario,
    cfg: &IntegratorConfig,
    seed: u64,
    spin_on: bool,
) -> EnsembleResult {
    let n = paths.len() as f64;
    let fates: Vec<PathFate> = paths.iter().map(|p| classify(p, scenario, cfg)).collect();
    let count = |f: PathFate| fates.iter().filter(|&&x| x == f).count();
    let transmitted = count(PathFate::Transmitted);
    let reflected = count(PathFate::Reflected);
    let in_barrier = count(PathFate::InBarrier);
    let mut warnings = Vec::new();
    if in_barrier > 0 {
        warnings.push(format!(
            "{in_barrier} paths still inside the barrier at t_max = {} fs; raise t_max",
            cfg.t_max
        ));
    }

    let crossing_scan_done = paths.len() <= CROSSING_SCAN_LIMIT;
    let mut crossing_pairs = Vec::new();
    if crossing_scan_done {
        let found: Vec<Vec<CrossingPair>> = (0..paths.len())
            .into_par_iter()
            .map(|i| {
                let mut v = Vec::new();
                for j in (i + 1)..paths.len() {
                    for c in xt_crossings(&paths[i], &paths[j]) {
                        v.push(CrossingPair {
                            path_i: i,
                            path_j: j,
                            projection: Projection::Xt,
                            time: c.time,
                            y_separation: c.y_separation,
                        });
                    }
                }
                v
            })
            .collect();
        crossing_pairs = found.into_iter().flatten().collect();
    }

    EnsembleResult {
        transmitted_fraction: transmitted as f64 / n,
        reflected_fraction: reflected as f64 / n,
        aborted_fraction: (paths.len() - transmitted - reflected) as f64 / n,
        in_barrier_count: in_barrier,
        paths,
        fates,
        crossing_pairs,
        crossing_scan_done,
        seed,
        spin_on,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packets::{UniformFieldPacket, VISIBLE_FIELD_FORCE};
    use crate::phys::electron_constants;

    fn uniform(force: f64) -> Scenario {
        let c = electron_constants();
        Scenario::UniformField(UniformFieldPacket::new(5.0, c.speed_for_energy(5.0).unwrap(), force, c).unwrap())
    }

    #[test]
    fn constant_field_step_is_exact() {
        let u = 13.0;
        let x = rk4_step(Vec3::new(1.0, 2.0, 3.0), 0.0, 0.1, |_, _| Ok(Vec3::new(u, 0.0, 0.0))).unwrap();
        assert_eq!(x, Vec3::new(1.0 + u * 0.1, 2.0, 3.0));
    }

    #[test]
    fn node_error_from_field_propagates() {
        let r = rk4_step(Vec3::ZERO, 0.0, 0.1, |x, t| {
            if t > 0.0 {
                Err(Error::Node { x: x.x, y: x.y, z: x.z, t, density: 0.0 })
            } else {
                Ok(Vec3::X)
            }
        });
        assert!(matches!(r, Err(Error::Node { .. })));
    }

    #[test]
    fn centre_follows_classical_path() {
        let s = uniform(VISIBLE_FIELD_FORCE);
        let Scenario::UniformField(p) = &s else { unreachable!() };
        let cfg = IntegratorConfig {
            t_max: 4.0,
            detector: Vec3::new(1e6, 0.0, 0.0),
            ..Default::default()
        };
        let path = integrate_path(Vec3::ZERO, &s, false, &cfg).unwrap();
        for sample in path.samples.iter().skip(1) {
            let expected = p.center_x(sample.t);
            assert!((sample.position.x - expected).abs() <= 1e-8 * expected.abs());
            assert!(sample.position.y.abs() < 1e-14 && sample.position.z.abs() < 1e-14);
        }
        assert!(path.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(path.events.last().unwrap().kind, EventKind::TMaxReached);
    }

    #[test]
    fn plane_crossing_refined() {
        let s = uniform(0.0);
        let cfg = IntegratorConfig {
            dt: 0.01,
            t_max: 5.0,
            ..Default::default()
        };
        let path = integrate_path(Vec3::ZERO, &s, false, &cfg).unwrap();
        let ev = path.first_event(EventKind::DetectorCrossing).unwrap();
        let u = s.group_speed();
        assert!((ev.time - 20.0 / u).abs() < 1e-10);
        assert!((ev.position.x - 20.0).abs() < 1e-9);
        // Stopped at the first crossing.
        assert!(path.last().t < 20.0 / u + 0.011);
    }

    #[test]
    fn sphere_detector_entry() {
        let s = uniform(0.0);
        let u = s.group_speed();
        let cfg = IntegratorConfig {
            dt: 0.01,
            t_max: 5.0,
            detector: Vec3::new(20.0, 0.0, 0.0),
            detector_mode: DetectorMode::Sphere { radius: 2.0 },
            ..Default::default()
        };
        let path = integrate_path(Vec3::ZERO, &s, false, &cfg).unwrap();
        let ev = path.first_event(EventKind::DetectorCrossing).unwrap();
        assert!((ev.time - 18.0 / u).abs() < 1e-9);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let s = uniform(0.0);
        let cfg = IntegratorConfig {
            dt: 0.01,
            t_max: 2.0,
            ..Default::default()
        };
        let a = run_ensemble(&s, true, &cfg, 4, 42).unwrap();
        let b = run_ensemble(&s, true, &cfg, 4, 42).unwrap();
        assert_eq!(a, b);
        let c = run_ensemble(&s, true, &cfg, 4, 43).unwrap();
        assert_ne!(a.paths[0].initial, c.paths[0].initial);
        // Per-path streams: the first paths of a larger ensemble are unchanged.
        let d = run_ensemble(&s, true, &cfg, 6, 42).unwrap();
        assert_eq!(a.paths[..], d.paths[..4]);
    }

    #[test]
    fn fractions_sum_to_one() {
        let s = uniform(0.0);
        let cfg = IntegratorConfig {
            dt: 0.01,
            t_max: 1.0,
            ..Default::default()
        };
        let r = run_ensemble(&s, false, &cfg, 20, 1).unwrap();
        let total = r.transmitted_fraction + r.reflected_fraction + r.aborted_fraction;
        assert!((total - 1.0).abs() < 1e-15);
        assert!(run_ensemble(&s, false, &cfg, 0, 1).is_err());
    }

    fn straight_path(id: usize, x0: f64, y0: f64, vx: f64, vy: f64) -> TrajectoryPath {
        TrajectoryPath {
            id,
            spin_on: false,
            initial: Vec3::new(x0, y0, 0.0),
            samples: (0..=10)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    PathSample {
                        t,
                        position: Vec3::new(x0 + vx * t, y0 + vy * t, 0.0),
                    }
                })
                .collect(),
            events: vec![],
        }
    }

    #[test]
    fn xt_crossing_detected_and_refined() {
        let a = straight_path(0, 0.0, 0.0, 2.0, 0.0);
        let b = straight_path(1, 1.0, 3.0, 0.0, 0.0);
        let c = xt_crossings(&a, &b);
        assert_eq!(c.len(), 1);
        assert!((c[0].time - 0.5).abs() < 1e-12);
        assert!((c[0].y_separation - 3.0).abs() < 1e-12);
        assert_eq!(axis_reorderings(&a, &b), [1, 0, 0]);
    }

    #[test]
    fn xy_crossing_detected() {
        let a = straight_path(0, 0.0, 0.0, 1.0, 1.0);
        let b = straight_path(1, 1.0, 0.0, -1.0, 1.0);
        let c = xy_crossings(&a, &b);
        assert_eq!(c.len(), 1);
        assert!((c[0].position_a.x - 0.5).abs() < 1e-12);
        assert!((c[0].position_a.y - 0.5).abs() < 1e-12);
        let parallel = straight_path(2, 0.0, 1.0, 1.0, 1.0);
        assert!(xy_crossings(&a, &parallel).is_empty());
    }
}
