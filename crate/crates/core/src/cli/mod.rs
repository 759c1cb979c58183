//! Command-line runner: `spintime <mode> --config FILE [--out DIR] ...`.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{parse_config, parse_config_with, Mode, RunConfig, SpinChoice};
pub use run::{run, RunOutcome};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    spin: Option<SpinArg>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `section.key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SpinArg {
    On,
    Off,
    Both,
}

#[derive(Parser, Debug)]
#[command(name = "spintime", version, about = "Spin-dependent Bohmian arrival times")]
struct Args {
    #[command(subcommand)]
    mode: ModeCmd,
}

#[derive(Subcommand, Debug)]
enum ModeCmd {
    /// Arrival-time distribution and mean arrival times at the detector.
    Distribution(Flags),
    /// Mean arrival times over a parameter sweep.
    Sweep(Flags),
    /// Trajectory ensemble sampled from the initial density.
    Ensemble(Flags),
    /// Data files for every figure, plus a manifest.
    Figures(Flags),
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Accuracy(_) => EXIT_CONVERGENCE,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (mode, flags) = match parsed.mode {
        ModeCmd::Distribution(f) => (Mode::Distribution, f),
        ModeCmd::Sweep(f) => (Mode::Sweep, f),
        ModeCmd::Ensemble(f) => (Mode::Ensemble, f),
        ModeCmd::Figures(f) => (Mode::Figures, f),
    };

    let mut overrides = vec![format!("run.mode={}", mode_name(mode))];
    if let Some(s) = flags.seed {
        overrides.push(format!("run.seed={s}"));
    }
    if let Some(s) = flags.spin {
        let v = match s {
            SpinArg::On => "on",
            SpinArg::Off => "off",
            SpinArg::Both => "both",
        };
        overrides.push(format!("run.spin={v}"));
    }
    if let Some(o) = &flags.out {
        overrides.push(format!("run.out={}", o.display()));
    }
    overrides.extend(flags.set.iter().cloned());

    let text = match std::fs::read_to_string(&flags.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", flags.config.display());
            return EXIT_CONFIG;
        }
    };
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", flags.config.display());
            return EXIT_CONFIG;
        }
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(flags.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_INTERNAL;
        }
    };
    match pool.install(|| run(&cfg, &out, &overrides)) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.converged {
                EXIT_OK
            } else {
                eprintln!("error: convergence checks failed; flagged artifacts were written");
                EXIT_CONVERGENCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Distribution => "distribution",
        Mode::Sweep => "sweep",
        Mode::Ensemble => "ensemble",
        Mode::Figures => "figures",
    }
}
