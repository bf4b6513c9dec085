//! Batch front end: configuration, runs, sweeps and their output files.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use entangle_core::result::StopCriterion;
use entangle_core::weyl::NamedTarget;

use crate::config::{load_raw, RunConfig};
use crate::run::{RunError, REPRODUCTION_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MONOTONICITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "entangle", version, about = "Perfect-entangler pulse optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `run.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only print errors.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize and write results.csv, pulses.csv, weyl_path.csv and summary.json.
    Run(Common),
    /// One run per value of a config key, plus sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `section.key=v1,v2,...`
        #[arg(long)]
        sweep: String,
    },
    /// Re-propagate the stored pulses of a run and recompute its metrics.
    Analyze(Common),
    /// Print the named target gates with their coordinates and invariants.
    Gates,
}

fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Numerical(_) | RunError::Mismatch(_) => EXIT_NUMERICAL,
        RunError::Io { .. } => EXIT_IO,
    }
}

fn load(common: &Common) -> Result<(config::RawConfig, RunConfig), RunError> {
    let mut raw = load_raw(&common.config)?;
    if let Some(seed) = common.seed {
        raw.set("run.seed", &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        raw.set("output.directory", &out.display().to_string())?;
    }
    let cfg = RunConfig::from_raw(&raw)?;
    Ok((raw, cfg))
}

pub fn gates_table() -> String {
    let mut s = String::from("name       c1/pi    c2/pi    c3/pi    g1        g2        g3        PE\n");
    for t in NamedTarget::ALL {
        let p = t.point();
        let g = t.invariants();
        s.push_str(&format!(
            "{:<10} {:>7.4}  {:>7.4}  {:>7.4}  {:>8.5}  {:>8.5}  {:>8.5}  {}\n",
            t.name(),
            p.c1 / std::f64::consts::PI,
            p.c2 / std::f64::consts::PI,
            p.c3 / std::f64::consts::PI,
            g.g1,
            g.g2,
            g.g3,
            if t.is_perfect_entangler() { "yes" } else { "no" }
        ));
    }
    s
}

fn dispatch(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Gates => {
            print!("{}", gates_table());
            Ok(EXIT_OK)
        }
        Command::Run(common) => {
            let (_, cfg) = load(&common)?;
            let result = run::run(&cfg)?;
            if !common.quiet {
                let m = &result.metrics;
                println!(
                    "{} {}: stop={} J_T={:.3e} error={:.3e} c=({:.4}, {:.4}, {:.4}) in_pe={} loss={:.3e} concurrence={:.6}",
                    result.algorithm.name(),
                    cfg.functional.kind,
                    result.stop.name(),
                    result.j_t,
                    result.error(),
                    m.point.c1,
                    m.point.c2,
                    m.point.c3,
                    m.in_pe,
                    m.pop_loss,
                    m.concurrence
                );
                if result.max_increase > 0.0 {
                    println!("J rose between iterations (max increase {:.3e})", result.max_increase);
                }
                println!("wrote {}", cfg.output_dir.display());
            }
            Ok(if result.stop == StopCriterion::MonotonicityViolation {
                EXIT_MONOTONICITY
            } else {
                EXIT_OK
            })
        }
        Command::Sweep { common, sweep } => {
            let (raw, cfg) = load(&common)?;
            let (key, values) = run::parse_sweep_arg(&sweep)?;
            let rows = run::sweep(&raw, &key, &values, &cfg.output_dir)?;
            if !common.quiet {
                for r in &rows {
                    println!("{key}={}: error={:.3e} stop={}", r.value, r.result.error(), r.result.stop.name());
                }
                println!("wrote {}", cfg.output_dir.join("sweep.csv").display());
            }
            Ok(
                if rows.iter().any(|r| r.result.stop == StopCriterion::MonotonicityViolation) {
                    EXIT_MONOTONICITY
                } else {
                    EXIT_OK
                },
            )
        }
        Command::Analyze(common) => {
            let (_, cfg) = load(&common)?;
            let a = run::analyze(&cfg, &cfg.output_dir)?;
            let m = &a.metrics;
            if !common.quiet {
                println!(
                    "J_T={:.16e} error={:.3e} c=({:.6}, {:.6}, {:.6}) g=({:.6}, {:.6}, {:.6}) in_pe={} loss={:.3e} concurrence={:.6} f_avg={:.8}",
                    a.j_t, m.error, m.point.c1, m.point.c2, m.point.c3, m.invariants.g1, m.invariants.g2,
                    m.invariants.g3, m.in_pe, m.pop_loss, m.concurrence, m.f_avg
                );
            }
            match a.deviation() {
                Some(d) if d > REPRODUCTION_TOL => Err(RunError::Mismatch(format!(
                    "stored J_T differs from re-propagation by {d:.3e}"
                ))),
                Some(d) => {
                    if !common.quiet {
                        println!("reproduces stored J_T to {d:.1e}");
                    }
                    Ok(EXIT_OK)
                }
                None => Ok(EXIT_OK),
            }
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
