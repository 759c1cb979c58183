//! Flat `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! # units: A fs eV
//! [run]
//! scenario = barrier
//! [packet]
//! energy = 10
//! sigma0 = 5 A
//! [barrier]
//! v0 = 8
//! width = 10
//! ```
//!
//! Keys before the first header belong to `[run]`. A value may carry a unit
//! suffix, which must match the key's dimension.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::arrival::{SeriesSettings, SweepParameter};
use crate::barrier::DEFAULT_K_NODES;
use crate::error::{Error, Result};
use crate::phys::STANDARD_GRAVITY_SI;
use crate::quadrature::QuadratureRule;
use crate::scenario::{BarrierSpec, FieldPreset, ScenarioSpec, UniformFieldSpec};
use crate::trajectory::{DetectorMode, IntegratorConfig, BARRIER_DEFAULT_DT, DEFAULT_DT, DEFAULT_SPHERE_RADIUS};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Distribution,
    Sweep,
    Ensemble,
    Figures,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "distribution" => Ok(Mode::Distribution),
            "sweep" => Ok(Mode::Sweep),
            "ensemble" => Ok(Mode::Ensemble),
            "figures" => Ok(Mode::Figures),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinChoice {
    On,
    Off,
    Both,
}

impl SpinChoice {
    /// Spin flags to run, spin-on first.
    pub fn flags(self) -> &'static [bool] {
        match self {
            SpinChoice::On => &[true],
            SpinChoice::Off => &[false],
            SpinChoice::Both => &[true, false],
        }
    }
}

impl std::str::FromStr for SpinChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "on" => Ok(SpinChoice::On),
            "off" => Ok(SpinChoice::Off),
            "both" => Ok(SpinChoice::Both),
            other => Err(format!("spin must be on, off or both, got '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureSet {
    Uniform,
    Barrier,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub mode: Mode,
    pub spin: SpinChoice,
    pub seed: u64,
    pub detector: Vec3,
    pub integrator: IntegratorConfig,
    pub ensemble_paths: usize,
    pub sweep: Option<SweepSpec>,
    pub arrival: SeriesSettings,
    pub figures: FigureSet,
    /// Paths per spin flag in the figure trajectory files.
    pub figure_paths: usize,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_ENSEMBLE_PATHS: usize = 100;
pub const DEFAULT_FIGURE_PATHS: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Time,
    Energy,
    Force,
    None,
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Raw key table; tracks which keys were consumed.
struct Table {
    entries: BTreeMap<String, Entry>,
}

const SECTIONS: &[&str] = &[
    "run", "packet", "field", "barrier", "detector", "integrator", "ensemble", "sweep", "arrival", "figures",
];

fn parse_units_header(text: &str, line: usize) -> Result<()> {
    let mut length = false;
    let mut time = false;
    let mut energy = false;
    for tok in text.split_whitespace() {
        match tok {
            "A" | "Å" | "angstrom" | "Angstrom" => length = true,
            "fs" => time = true,
            "eV" | "ev" => energy = true,
            other => {
                return Err(Error::config(
                    line,
                    format!("unsupported unit '{other}' in header; lengths are A, times fs, energies eV"),
                ))
            }
        }
    }
    if !(length && time && energy) {
        return Err(Error::config(line, "units header must declare A, fs and eV"));
    }
    Ok(())
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = "run".to_string();
        let mut seen_content = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(units) = comment.trim().strip_prefix("units:") {
                    if seen_content {
                        return Err(Error::config(line, "units header must precede all keys"));
                    }
                    parse_units_header(units, line)?;
                }
                continue;
            }
            seen_content = true;
            let content = match trimmed.find('#') {
                Some(p) => trimmed[..p].trim(),
                None => trimmed,
            };
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(line, format!("malformed section header '{content}'")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::config(line, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(Error::config(line, "empty key or value"));
            }
            let full = format!("{section}.{key}");
            if !KNOWN_KEYS.contains(&full.as_str()) {
                return Err(Error::config(line, format!("unknown key '{key}' in [{section}]")));
            }
            if entries.contains_key(&full) {
                return Err(Error::config(line, format!("duplicate key '{full}'")));
            }
            entries.insert(
                full,
                Entry {
                    value: value.to_string(),
                    line,
                    used: false,
                },
            );
        }
        Ok(Table { entries })
    }

    /// Applies `section.key=value` overrides; they win over file values.
    fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(0, format!("override '{spec}' is not key=value")))?;
        let key = key.trim();
        let full = if key.contains('.') { key.to_string() } else { format!("run.{key}") };
        if !KNOWN_KEYS.contains(&full.as_str()) {
            return Err(Error::config(0, format!("unknown override key '{key}'")));
        }
        self.entries.insert(
            full,
            Entry {
                value: value.trim().to_string(),
                line: 0,
                used: false,
            },
        );
        Ok(())
    }

    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::config(line, format!("{key}: {e}"))),
        }
    }

    fn number(&mut self, key: &str, dim: Dim) -> Result<Option<f64>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        parse_quantity(&v, dim).map(Some).map_err(|m| Error::config(line, format!("{key}: {m}")))
    }

    fn numbers(&mut self, key: &str, dim: Dim) -> Result<Option<Vec<f64>>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        let unit = unit_of_list(&v, dim).map_err(|m| Error::config(line, format!("{key}: {m}")))?;
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty() && Some(*s) != unit)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::config(line, format!("{key}: '{s}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn unused_check(&self) -> Result<()> {
        for (k, e) in &self.entries {
            if !e.used {
                return Err(Error::config(e.line, format!("key '{k}' does not apply to this scenario")));
            }
        }
        Ok(())
    }
}

const KNOWN_KEYS: &[&str] = &[
    "run.scenario",
    "run.mode",
    "run.spin",
    "run.seed",
    "run.out",
    "packet.sigma0",
    "packet.energy",
    "packet.k0",
    "packet.x0",
    "packet.mass_factor",
    "field.preset",
    "field.force",
    "field.g_si",
    "barrier.v0",
    "barrier.width",
    "barrier.k_nodes",
    "barrier.rule",
    "detector.position",
    "detector.mode",
    "detector.radius",
    "integrator.dt",
    "integrator.t_max",
    "integrator.store_stride",
    "integrator.stop_at_detector",
    "integrator.left_stop_plane",
    "ensemble.paths",
    "sweep.parameter",
    "sweep.values",
    "arrival.t_max",
    "arrival.points",
    "arrival.max_doublings",
    "figures.set",
    "figures.paths",
];

fn unit_matches(unit: &str, dim: Dim) -> bool {
    match dim {
        Dim::Length => matches!(unit, "A" | "Å" | "angstrom"),
        Dim::Time => unit == "fs",
        Dim::Energy => matches!(unit, "eV" | "ev"),
        Dim::Force => matches!(unit, "eV/A" | "eV/Å"),
        Dim::None => false,
    }
}

/// A number with an optional unit suffix.
fn parse_quantity(text: &str, dim: Dim) -> std::result::Result<f64, String> {
    let mut parts = text.split_whitespace();
    let num = parts.next().ok_or("missing value")?;
    let unit = parts.next();
    if parts.next().is_some() {
        return Err(format!("unexpected trailing text in '{text}'"));
    }
    if let Some(u) = unit {
        if !unit_matches(u, dim) {
            return Err(format!("unit '{u}' is not allowed here"));
        }
    }
    num.parse::<f64>().map_err(|_| format!("'{num}' is not a number"))
}

/// For lists, a unit may only appear as the last token.
fn unit_of_list(text: &str, dim: Dim) -> std::result::Result<Option<&str>, String> {
    let last = text.split_whitespace().last().unwrap_or("");
    if last.parse::<f64>().is_ok() || last.is_empty() {
        return Ok(None);
    }
    if unit_matches(last, dim) {
        Ok(Some(last))
    } else {
        Err(format!("unit '{last}' is not allowed here"))
    }
}

fn require_positive(table: &Table, key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(table.line(key), format!("{key} must be positive, got {v}")))
    }
}

/// Parses and validates a config; `overrides` are `section.key=value` strings.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut t = Table::parse(text)?;
    for o in overrides {
        t.apply_override(o)?;
    }
    let scenario_name: String = t
        .parsed("run.scenario")?
        .ok_or_else(|| Error::config(0, "missing required key 'scenario' in [run]"))?;
    let mode = t.parsed::<Mode>("run.mode")?.unwrap_or(Mode::Distribution);
    let spin = t.parsed::<SpinChoice>("run.spin")?.unwrap_or(SpinChoice::Both);
    let seed = t.parsed::<u64>("run.seed")?.unwrap_or(DEFAULT_SEED);
    let out = t.parsed::<String>("run.out")?.map(PathBuf::from);

    let sigma0 = t.number("packet.sigma0", Dim::Length)?;
    let energy = t.number("packet.energy", Dim::Energy)?;
    let k0 = t.number("packet.k0", Dim::None)?;
    let mass_factor = t.number("packet.mass_factor", Dim::None)?.unwrap_or(1.0);
    require_positive(&t, "packet.mass_factor", mass_factor)?;
    if energy.is_some() && k0.is_some() {
        return Err(Error::config(t.line("packet.k0"), "give either energy or k0, not both"));
    }

    let mut scenario = match scenario_name.as_str() {
        "uniform_field" => {
            let mut u = UniformFieldSpec {
                mass_factor,
                ..Default::default()
            };
            if let Some(s) = sigma0 {
                u.sigma0 = s;
            }
            if let Some(e) = energy {
                u.energy = e;
            }
            if let Some((_, line)) = t.raw("packet.x0") {
                return Err(Error::config(line, "x0 is fixed at 0 for the uniform-field packet"));
            }
            let preset = t.parsed::<String>("field.preset")?;
            let force = t.number("field.force", Dim::Force)?;
            u.g_si = t.number("field.g_si", Dim::None)?.unwrap_or(STANDARD_GRAVITY_SI);
            u.field = match (preset.as_deref(), force) {
                (None | Some("gravity"), None) => FieldPreset::Gravity,
                (Some("visible"), None) => FieldPreset::Visible,
                (None | Some("custom"), Some(k)) => FieldPreset::Custom(k),
                (Some("custom"), None) => {
                    return Err(Error::config(t.line("field.preset"), "custom field needs 'force'"))
                }
                (Some(p @ ("gravity" | "visible")), Some(_)) => {
                    return Err(Error::config(
                        t.line("field.force"),
                        format!("'force' conflicts with preset '{p}'"),
                    ))
                }
                (Some(p), _) => {
                    return Err(Error::config(
                        t.line("field.preset"),
                        format!("unknown field preset '{p}' (gravity, visible, custom)"),
                    ))
                }
            };
            if !u.g_si.is_finite() {
                return Err(Error::config(t.line("field.g_si"), "g_si must be finite"));
            }
            ScenarioSpec::UniformField(u)
        }
        "barrier" => {
            let mut b = BarrierSpec {
                mass_factor,
                ..Default::default()
            };
            if let Some(s) = sigma0 {
                b.sigma0 = s;
            }
            if let Some(e) = energy {
                b.energy = e;
            }
            b.x0 = t.number("packet.x0", Dim::Length)?;
            if let Some(v) = t.number("barrier.v0", Dim::Energy)? {
                b.v0 = v;
            }
            if let Some(d) = t.number("barrier.width", Dim::Length)? {
                b.width = d;
            }
            b.k_nodes = t.parsed::<usize>("barrier.k_nodes")?.unwrap_or(DEFAULT_K_NODES);
            b.rule = t.parsed::<QuadratureRule>("barrier.rule")?.unwrap_or(QuadratureRule::GaussLegendre);
            if !(b.v0 >= 0.0 && b.v0.is_finite()) {
                return Err(Error::config(t.line("barrier.v0"), format!("v0 must be >= 0, got {}", b.v0)));
            }
            require_positive(&t, "barrier.width", b.width)?;
            if b.k_nodes < 3 {
                return Err(Error::config(t.line("barrier.k_nodes"), "k_nodes must be >= 3"));
            }
            ScenarioSpec::Barrier(b)
        }
        other => {
            return Err(Error::config(
                t.line("run.scenario"),
                format!("scenario must be uniform_field or barrier, got '{other}'"),
            ))
        }
    };
    require_positive(&t, "packet.sigma0", scenario.sigma0())?;
    if let Some(k) = k0 {
        require_positive(&t, "packet.k0", k)?;
        *scenario.energy_mut() = scenario.constants().wavenumber_to_energy(k);
    }
    let e = *scenario.energy_mut();
    require_positive(&t, "packet.energy", e)?;

    let detector = match t.numbers("detector.position", Dim::Length)? {
        None => Vec3::new(20.0, 20.0, 20.0),
        Some(v) if v.len() == 3 => Vec3::new(v[0], v[1], v[2]),
        Some(v) => {
            return Err(Error::config(
                t.line("detector.position"),
                format!("detector position needs 3 numbers, got {}", v.len()),
            ))
        }
    };
    if !detector.is_finite() {
        return Err(Error::config(t.line("detector.position"), "detector position must be finite"));
    }
    let detector_mode = match t.parsed::<String>("detector.mode")?.as_deref() {
        None | Some("plane_x") => {
            if let Some((_, line)) = t.raw("detector.radius") {
                return Err(Error::config(line, "radius applies only to detector mode 'sphere'"));
            }
            DetectorMode::PlaneX
        }
        Some("sphere") => {
            let radius = t.number("detector.radius", Dim::Length)?.unwrap_or(DEFAULT_SPHERE_RADIUS);
            require_positive(&t, "detector.radius", radius)?;
            DetectorMode::Sphere { radius }
        }
        Some(other) => {
            return Err(Error::config(
                t.line("detector.mode"),
                format!("detector mode must be plane_x or sphere, got '{other}'"),
            ))
        }
    };

    let is_barrier = matches!(scenario, ScenarioSpec::Barrier(_));
    let default_t_max = if is_barrier { 20.0 } else { 10.0 };
    let default_left_stop = match scenario {
        ScenarioSpec::Barrier(b) => Some(b.x0.unwrap_or(-10.0 * b.sigma0) - 6.0 * b.sigma0),
        ScenarioSpec::UniformField(_) => None,
    };
    let integrator = IntegratorConfig {
        dt: t
            .number("integrator.dt", Dim::Time)?
            .unwrap_or(if is_barrier { BARRIER_DEFAULT_DT } else { DEFAULT_DT }),
        t_max: t.number("integrator.t_max", Dim::Time)?.unwrap_or(default_t_max),
        detector,
        detector_mode,
        store_stride: t.parsed::<usize>("integrator.store_stride")?.unwrap_or(1),
        stop_at_detector: t.parsed::<bool>("integrator.stop_at_detector")?.unwrap_or(true),
        left_stop_plane: match t.parsed::<String>("integrator.left_stop_plane")?.as_deref() {
            None => default_left_stop,
            Some("none") => None,
            Some(v) => Some(
                parse_quantity(v, Dim::Length)
                    .map_err(|m| Error::config(t.line("integrator.left_stop_plane"), m))?,
            ),
        },
    };
    require_positive(&t, "integrator.dt", integrator.dt)?;
    require_positive(&t, "integrator.t_max", integrator.t_max)?;
    if integrator.store_stride < 1 {
        return Err(Error::config(t.line("integrator.store_stride"), "store_stride must be >= 1"));
    }

    let ensemble_paths = t.parsed::<usize>("ensemble.paths")?.unwrap_or(DEFAULT_ENSEMBLE_PATHS);
    if ensemble_paths < 1 {
        return Err(Error::config(t.line("ensemble.paths"), "paths must be >= 1"));
    }

    let sweep_parameter = t.parsed::<SweepParameter>("sweep.parameter")?;
    let sweep_values = t.numbers("sweep.values", Dim::None)?;
    let sweep = match (sweep_parameter, sweep_values) {
        (Some(parameter), Some(values)) => {
            if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::config(t.line("sweep.values"), "sweep values must be positive numbers"));
            }
            if parameter == SweepParameter::BarrierWidth && !is_barrier {
                return Err(Error::config(
                    t.line("sweep.parameter"),
                    "barrier_width sweep needs scenario = barrier",
                ));
            }
            Some(SweepSpec { parameter, values })
        }
        (None, None) => None,
        (Some(_), None) => return Err(Error::config(t.line("sweep.parameter"), "sweep needs 'values'")),
        (None, Some(_)) => return Err(Error::config(t.line("sweep.values"), "sweep needs 'parameter'")),
    };
    if mode == Mode::Sweep && sweep.is_none() {
        return Err(Error::config(0, "mode sweep needs a [sweep] section with parameter and values"));
    }

    let defaults = SeriesSettings::default();
    let arrival = SeriesSettings {
        t_max: t.number("arrival.t_max", Dim::Time)?,
        points: t.parsed::<usize>("arrival.points")?.unwrap_or(defaults.points),
        max_doublings: t.parsed::<usize>("arrival.max_doublings")?.unwrap_or(defaults.max_doublings),
    };
    if let Some(tm) = arrival.t_max {
        require_positive(&t, "arrival.t_max", tm)?;
    }
    if arrival.points < 3 {
        return Err(Error::config(t.line("arrival.points"), "points must be >= 3"));
    }

    let figures = match t.parsed::<String>("figures.set")?.as_deref() {
        None | Some("all") => FigureSet::All,
        Some("uniform") | Some("uniform_field") => FigureSet::Uniform,
        Some("barrier") => FigureSet::Barrier,
        Some(other) => {
            return Err(Error::config(
                t.line("figures.set"),
                format!("figures set must be uniform, barrier or all, got '{other}'"),
            ))
        }
    };
    let figure_paths = t.parsed::<usize>("figures.paths")?.unwrap_or(DEFAULT_FIGURE_PATHS);

    t.unused_check()?;
    // Remaining invariants (k grid in k > 0, constants) are checked by building.
    scenario
        .build()
        .map_err(|e| Error::config(0, format!("invalid scenario: {e}")))?;

    Ok(RunConfig {
        scenario,
        mode,
        spin,
        seed,
        detector,
        integrator,
        ensemble_paths,
        sweep,
        arrival,
        figures,
        figure_paths,
        out,
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}
