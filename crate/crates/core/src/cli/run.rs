//! Executes a parsed run and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{FigureSet, Mode, RunConfig};
use crate::arrival::{
    adaptive_series, arrival_distribution, summarize, sweep, ArrivalSeries, ArrivalSummary, SweepParameter, SweepRow,
    TAIL_TOL,
};
use crate::error::Result;
use crate::scenario::{BarrierSpec, FieldPreset, ScenarioSpec, UniformFieldSpec};
use crate::trajectory::{
    run_ensemble, EnsembleResult, IntegratorConfig, PathFate, BARRIER_DEFAULT_DT, CROSSING_SCAN_LIMIT, DEFAULT_DT,
};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunOutcome {
    /// False when any tail bound or quadrature check failed.
    pub converged: bool,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    fn new() -> Self {
        RunOutcome {
            converged: true,
            ..Default::default()
        }
    }
}

/// 17 significant digits, locale independent.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:.16e}")
}

fn write_file(out: &Path, name: &str, body: &str, outcome: &mut RunOutcome) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, body)?;
    outcome.files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T, outcome: &mut RunOutcome) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_file(out, name, &body, outcome)
}

pub fn distribution_csv(s: &ArrivalSeries) -> Result<String> {
    let pi_spin = arrival_distribution(s, true)?;
    let pi_nospin = arrival_distribution(s, false)?;
    let mut body = String::from("t_fs,jmag_spin,jmag_nospin,pi_spin,pi_nospin\n");
    for i in 0..s.times.len() {
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            fmt_f64(s.times[i]),
            fmt_f64(s.jmag_spin[i]),
            fmt_f64(s.jmag_spinless[i]),
            fmt_f64(pi_spin[i]),
            fmt_f64(pi_nospin[i])
        );
    }
    Ok(body)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut body = String::from("param_value,tau_fs,tau_i_fs,delta_fs,tail_bound\n");
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            fmt_f64(r.value),
            fmt_f64(s.tau),
            fmt_f64(s.tau_i),
            fmt_f64(s.delta),
            fmt_f64(s.tail_bound)
        );
    }
    body
}

pub fn trajectory_csv(results: &[EnsembleResult]) -> String {
    let mut body = String::from("t_fs,x_A,y_A,z_A,path_id,spin_flag\n");
    for r in results {
        let flag = u8::from(r.spin_on);
        for p in &r.paths {
            for s in &p.samples {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    fmt_f64(s.t),
                    fmt_f64(s.position.x),
                    fmt_f64(s.position.y),
                    fmt_f64(s.position.z),
                    p.id,
                    flag
                );
            }
        }
    }
    body
}

fn summary_json(s: &ArrivalSummary, seed: u64) -> serde_json::Value {
    json!({
        "tau_fs": s.tau,
        "tau_i_fs": s.tau_i,
        "delta_fs": s.delta,
        "tail_bound": s.tail_bound,
        "converged": s.converged,
        "t_max_fs": s.t_max,
        "points": s.points,
        "k_nodes": s.k_nodes,
        "seed": seed,
    })
}

/// Ensemble report without the per-path samples, which go to the CSV.
fn ensemble_json(r: &EnsembleResult) -> serde_json::Value {
    let count = |f: PathFate| r.fates.iter().filter(|&&x| x == f).count();
    json!({
        "spin_on": r.spin_on,
        "seed": r.seed,
        "paths": r.paths.len(),
        "transmitted_fraction": r.transmitted_fraction,
        "reflected_fraction": r.reflected_fraction,
        "aborted_fraction": r.aborted_fraction,
        "in_barrier": r.in_barrier_count,
        "node_aborts": count(PathFate::Aborted),
        "crossing_scan_done": r.crossing_scan_done,
        "crossing_count": r.crossing_pairs.len(),
        "crossing_pairs": r.crossing_pairs,
        "warnings": r.warnings,
    })
}

fn note_series(s: &ArrivalSummary, label: &str, outcome: &mut RunOutcome) {
    if !s.converged {
        outcome.converged = false;
        outcome
            .warnings
            .push(format!("{label}: tail bound {:.3e} above {TAIL_TOL:.0e}", s.tail_bound));
    }
}

fn note_rows(rows: &[SweepRow], label: &str, outcome: &mut RunOutcome) {
    for r in rows {
        note_series(&r.summary, &format!("{label} value {}", r.value), outcome);
        for w in &r.warnings {
            outcome.warnings.push(format!("{label} value {}: {w}", r.value));
        }
    }
}

fn ensembles(spec: &ScenarioSpec, cfg: &IntegratorConfig, spins: &[bool], n: usize, seed: u64) -> Result<Vec<EnsembleResult>> {
    let scenario = spec.build()?;
    spins.iter().map(|&s| run_ensemble(&scenario, s, cfg, n, seed)).collect()
}

fn fate_flips(results: &[EnsembleResult]) -> Option<usize> {
    let on = results.iter().find(|r| r.spin_on)?;
    let off = results.iter().find(|r| !r.spin_on)?;
    Some(on.fates.iter().zip(&off.fates).filter(|(a, b)| a != b).count())
}

/// Writes resolved.json and runs the configured mode into `out`.
pub fn run(cfg: &RunConfig, out: &Path, overrides: &[String]) -> Result<RunOutcome> {
    fs::create_dir_all(out)?;
    let mut outcome = RunOutcome::new();
    let resolved = json!({
        "version": VERSION,
        "config": cfg,
        "constants": cfg.scenario.constants(),
        "seed": cfg.seed,
        "overrides": overrides,
    });
    write_json(out, "resolved.json", &resolved, &mut outcome)?;

    match cfg.mode {
        Mode::Distribution => {
            let scenario = cfg.scenario.build()?;
            let series = adaptive_series(&scenario, cfg.detector, &cfg.arrival)?;
            let s = summarize(&series)?;
            note_series(&s, "distribution", &mut outcome);
            write_file(out, "distribution.csv", &distribution_csv(&series)?, &mut outcome)?;
            write_json(out, "summary.json", &summary_json(&s, cfg.seed), &mut outcome)?;
        }
        Mode::Sweep => {
            let sw = cfg.sweep.as_ref().expect("validated at parse time");
            let rows = sweep(sw.parameter, &sw.values, &cfg.scenario, cfg.detector, &cfg.arrival)?;
            note_rows(&rows, "sweep", &mut outcome);
            write_file(out, "sweep.csv", &sweep_csv(&rows), &mut outcome)?;
            write_json(out, "sweep.json", &rows, &mut outcome)?;
        }
        Mode::Ensemble => {
            let results = ensembles(&cfg.scenario, &cfg.integrator, cfg.spin.flags(), cfg.ensemble_paths, cfg.seed)?;
            write_file(out, "trajectories.csv", &trajectory_csv(&results), &mut outcome)?;
            let report = json!({
                "runs": results.iter().map(ensemble_json).collect::<Vec<_>>(),
                "fate_flips": fate_flips(&results),
                "crossing_scan_limit": CROSSING_SCAN_LIMIT,
            });
            write_json(out, "ensemble.json", &report, &mut outcome)?;
            for r in &results {
                outcome.warnings.extend(r.warnings.iter().cloned());
            }
        }
        Mode::Figures => figures(cfg, out, &mut outcome)?,
    }
    Ok(outcome)
}

/// Packet parameters come from the config when it describes the same
/// scenario; otherwise the reference presets are used.
fn figure_specs(cfg: &RunConfig) -> (UniformFieldSpec, BarrierSpec) {
    let mut u = UniformFieldSpec::default();
    let mut b = BarrierSpec::default();
    match cfg.scenario {
        ScenarioSpec::UniformField(s) => u = s,
        ScenarioSpec::Barrier(s) => b = s,
    }
    (u, b)
}

pub const FIG_MASS_VALUES: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];
pub const FIG_UNIFORM_SPEED_VALUES: [f64; 8] = [0.001, 0.0015, 0.002, 0.0025, 0.003, 0.0035, 0.004, 0.005];
pub const FIG_WIDTH_VALUES: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
pub const FIG_BARRIER_SPEED_VALUES: [f64; 5] = [0.006, 0.0065, 0.007, 0.0075, 0.008];

struct FigureWriter<'a> {
    out: &'a Path,
    manifest: Vec<serde_json::Value>,
}

impl FigureWriter<'_> {
    fn record(&mut self, figure: u32, file: &str, schema: &str, description: &str, converged: bool) {
        self.manifest.push(json!({
            "figure": figure,
            "file": file,
            "schema": schema,
            "description": description,
            "converged": converged,
        }));
    }

    fn distribution(&mut self, figure: u32, spec: &ScenarioSpec, cfg: &RunConfig, outcome: &mut RunOutcome, what: &str) -> Result<()> {
        let scenario = spec.build()?;
        let series = adaptive_series(&scenario, cfg.detector, &cfg.arrival)?;
        let s = summarize(&series)?;
        note_series(&s, &format!("fig{figure}"), outcome);
        let name = format!("fig{figure}_distribution.csv");
        write_file(self.out, &name, &distribution_csv(&series)?, outcome)?;
        write_json(self.out, &format!("fig{figure}_summary.json"), &summary_json(&s, cfg.seed), outcome)?;
        self.record(figure, &name, "distribution", what, s.converged);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &mut self,
        figure: u32,
        parameter: SweepParameter,
        values: &[f64],
        spec: &ScenarioSpec,
        cfg: &RunConfig,
        outcome: &mut RunOutcome,
        what: &str,
    ) -> Result<()> {
        let rows = sweep(parameter, values, spec, cfg.detector, &cfg.arrival)?;
        note_rows(&rows, &format!("fig{figure}"), outcome);
        let name = format!("fig{figure}_sweep.csv");
        write_file(self.out, &name, &sweep_csv(&rows), outcome)?;
        self.record(figure, &name, "sweep", what, rows.iter().all(|r| r.summary.converged));
        Ok(())
    }

    fn trajectories(&mut self, figure: u32, spec: &ScenarioSpec, cfg: &RunConfig, t_max: f64, outcome: &mut RunOutcome, what: &str) -> Result<()> {
        let mut icfg = cfg.integrator;
        icfg.t_max = t_max;
        let same_kind = std::mem::discriminant(spec) == std::mem::discriminant(&cfg.scenario);
        if !same_kind {
            icfg.dt = match spec {
                ScenarioSpec::Barrier(_) => BARRIER_DEFAULT_DT,
                ScenarioSpec::UniformField(_) => DEFAULT_DT,
            };
        }
        icfg.store_stride = icfg.store_stride.max((0.01 / icfg.dt).round().max(1.0) as usize);
        if let ScenarioSpec::Barrier(b) = spec {
            icfg.left_stop_plane = Some(b.x0.unwrap_or(-10.0 * b.sigma0) - 6.0 * b.sigma0);
        } else {
            icfg.left_stop_plane = None;
        }
        let results = ensembles(spec, &icfg, &[true, false], cfg.figure_paths, cfg.seed)?;
        let name = format!("fig{figure}_trajectories.csv");
        write_file(self.out, &name, &trajectory_csv(&results), outcome)?;
        self.record(figure, &name, "trajectory", what, true);
        Ok(())
    }
}

fn figures(cfg: &RunConfig, out: &Path, outcome: &mut RunOutcome) -> Result<()> {
    let (u, b) = figure_specs(cfg);
    let uspec = ScenarioSpec::UniformField(u);
    let bspec = ScenarioSpec::Barrier(b);
    let mut w = FigureWriter {
        out,
        manifest: Vec::new(),
    };
    if cfg.figures != FigureSet::Barrier {
        w.distribution(1, &uspec, cfg, outcome, "arrival-time distribution, uniform field")?;
        w.sweep(2, SweepParameter::Mass, &FIG_MASS_VALUES, &uspec, cfg, outcome, "mean arrival time versus mass")?;
        w.sweep(3, SweepParameter::GroupSpeed, &FIG_UNIFORM_SPEED_VALUES, &uspec, cfg, outcome, "mean arrival time versus u/c, uniform field")?;
        // The gravity preset leaves paths visually straight; the visible preset bends them.
        let traj = ScenarioSpec::UniformField(UniformFieldSpec {
            field: match u.field {
                FieldPreset::Gravity => FieldPreset::Visible,
                f => f,
            },
            ..u
        });
        w.trajectories(4, &traj, cfg, 3.0, outcome, "Bohmian paths with and without the spin term, uniform field")?;
    }
    if cfg.figures != FigureSet::Uniform {
        w.distribution(5, &bspec, cfg, outcome, "arrival-time distribution, barrier")?;
        w.sweep(6, SweepParameter::BarrierWidth, &FIG_WIDTH_VALUES, &bspec, cfg, outcome, "mean arrival time versus barrier width")?;
        w.sweep(7, SweepParameter::GroupSpeed, &FIG_BARRIER_SPEED_VALUES, &bspec, cfg, outcome, "mean arrival time versus u/c, barrier")?;
        w.trajectories(8, &bspec, cfg, 6.0, outcome, "Bohmian paths with and without the spin term, barrier")?;
    }
    let manifest = json!({ "version": VERSION, "seed": cfg.seed, "figures": w.manifest });
    write_json(out, "manifest.json", &manifest, outcome)
}
