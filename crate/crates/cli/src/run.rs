//! Executes a configured optimization and persists its results.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use entangle_core::crab::optimize_crab;
use entangle_core::krotov::optimize_krotov;
use entangle_core::models::ModelSpec;
use entangle_core::propagate::{ControlField, TimeGrid};
use entangle_core::result::{gate_metrics, propagate_gate, GateMetrics, OptimizationResult, StopCriterion};
use entangle_core::weyl::{fidelity, j_tilde, FunctionalSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Carrier, ConfigError, GuessConfig, ModelConfig, OptimizerConfig, RawConfig, RunConfig};

pub const RESULTS_HEADER: &str = "iter,J_total,J_T,error,c1,c2,c3,g1,g2,g3,pop_loss";
pub const WEYL_PATH_HEADER: &str = "eval_index,c1,c2,c3,metric";
pub const SWEEP_HEADER: &str = "value,error,J_T,pop_loss,in_pe,concurrence,stop";

/// Agreement required between a stored `J_T` and a re-propagation.
pub const REPRODUCTION_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(entangle_core::Error),
    Io { path: PathBuf, source: io::Error },
    /// The stored pulses no longer reproduce the recorded result.
    Mismatch(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            RunError::Mismatch(m) => write!(f, "reproduction failed: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<entangle_core::Error> for RunError {
    fn from(e: entangle_core::Error) -> Self {
        RunError::Numerical(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Floats are written with 17 significant digits so they parse back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn grid_of(cfg: &RunConfig) -> Result<TimeGrid, RunError> {
    Ok(TimeGrid::new(cfg.duration, cfg.nt)?)
}

/// Guess fields for every control, with the seeded jitter applied.
pub fn guess_fields(cfg: &RunConfig, model: &ModelSpec, grid: &TimeGrid) -> Result<Vec<ControlField>, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6775_6573_73);
    let labels = model.control_labels();
    let mut out = Vec::with_capacity(labels.len());
    for label in labels {
        let scale = if cfg.jitter.amplitude > 0.0 {
            1.0 + rng.random_range(-cfg.jitter.amplitude..=cfg.jitter.amplitude)
        } else {
            1.0
        };
        let shift = if cfg.jitter.phase > 0.0 {
            rng.random_range(-cfg.jitter.phase..=cfg.jitter.phase)
        } else {
            0.0
        };
        let f = match cfg.guess {
            GuessConfig::Zero => ControlField::zeros(label, *grid),
            GuessConfig::Constant(v) => ControlField::constant(label, *grid, v * scale)?,
            GuessConfig::Sin2 { peak, carrier, phase } => {
                let carrier = match (carrier, &cfg.model) {
                    (Carrier::Fixed(w), _) => w,
                    (Carrier::TwoPhoton, ModelConfig::Transmon(p)) => 0.5 * (p.omega1 + p.omega2),
                    (Carrier::TwoPhoton, _) => {
                        return Err(ConfigError {
                            key: "guess.carrier".into(),
                            message: "two_photon needs the transmon model".into(),
                        }
                        .into())
                    }
                };
                ControlField::sin2_pulse(label, *grid, peak * scale, carrier, phase + shift)?
            }
        };
        out.push(f);
    }
    Ok(out)
}

/// Runs the configured optimizer without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<OptimizationResult, RunError> {
    let model = cfg.model.build()?;
    let grid = grid_of(cfg)?;
    let guess = guess_fields(cfg, &model, &grid)?;
    let result = match &cfg.optimizer {
        OptimizerConfig::Krotov(k) => optimize_krotov(&model, &grid, &guess, k)?,
        OptimizerConfig::Crab(c) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let base: Vec<ControlField> = if matches!(cfg.guess, GuessConfig::Zero) {
                Vec::new()
            } else {
                guess
            };
            optimize_crab(&model, &grid, &cfg.functional, c, &base, &mut rng)?
        }
    };
    Ok(result)
}

/// `J_T` of a gate as the optimizer reports it.
pub fn recorded_j_t(cfg: &RunConfig, spec: &FunctionalSpec, gate: &entangle_core::Gate) -> Result<f64, RunError> {
    Ok(match cfg.optimizer {
        OptimizerConfig::Krotov(_) => j_tilde(gate, spec)?,
        OptimizerConfig::Crab(_) => 1.0 - fidelity(gate, spec)?,
    })
}

pub fn results_csv(result: &OptimizationResult) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in &result.iterations {
        let cols = [
            r.j_total,
            r.j_t,
            r.error,
            r.point.c1,
            r.point.c2,
            r.point.c3,
            r.invariants.g1,
            r.invariants.g2,
            r.invariants.g3,
            r.pop_loss,
        ];
        let _ = write!(s, "{}", r.iter);
        for c in cols {
            let _ = write!(s, ",{}", fmt_f64(c));
        }
        s.push('\n');
    }
    s
}

pub fn pulses_csv(fields: &[ControlField]) -> String {
    let mut s = String::from("t_ns");
    for f in fields {
        s.push(',');
        s.push_str(f.label());
    }
    s.push('\n');
    let Some(first) = fields.first() else {
        return s;
    };
    for (j, t) in first.grid().times().iter().enumerate() {
        s.push_str(&fmt_f64(*t));
        for f in fields {
            s.push(',');
            s.push_str(&fmt_f64(f.samples()[j]));
        }
        s.push('\n');
    }
    s
}

/// Chamber trajectory: every CRAB evaluation (fidelity as metric) or, when
/// those are not recorded, one row per iteration (`J_T` as metric).
pub fn weyl_path_csv(result: &OptimizationResult) -> String {
    let mut s = String::from(WEYL_PATH_HEADER);
    s.push('\n');
    let mut row = |i: usize, c: [f64; 3], m: f64| {
        let _ = writeln!(s, "{i},{},{},{},{}", fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(c[2]), fmt_f64(m));
    };
    if result.evaluations.is_empty() {
        for r in &result.iterations {
            row(r.iter, r.point.as_array(), r.j_t);
        }
    } else {
        for e in &result.evaluations {
            let c = e.point.map(|p| p.as_array()).unwrap_or([f64::NAN; 3]);
            row(e.index, c, e.fidelity);
        }
    }
    s
}

fn metrics_json(m: &GateMetrics) -> serde_json::Value {
    json!({
        "c": m.point.as_array(),
        "g": m.invariants.as_array(),
        "in_pe": m.in_pe,
        "f_pe": m.f_pe,
        "f_pe_tilde": m.f_pe_tilde,
        "f_lec_tilde": m.f_lec_tilde,
        "d_pe": m.d_pe,
        "dist_closest_unitary": m.dist,
        "pop_loss": m.pop_loss,
        "concurrence": m.concurrence,
        "concurrence_error": m.concurrence_error(),
        "f_avg": m.f_avg,
        "avg_error": m.avg_error(),
        "error": m.error,
    })
}

fn stop_exit_ok(stop: StopCriterion) -> bool {
    !matches!(stop, StopCriterion::MonotonicityViolation)
}

pub fn summary_json(cfg: &RunConfig, result: &OptimizationResult) -> serde_json::Value {
    let spec = result.functional;
    json!({
        "algorithm": result.algorithm.name(),
        "model": cfg.model.name(),
        "functional": cfg.functional.kind.name(),
        "w_final": spec.w,
        "seed": cfg.seed,
        "T_ns": cfg.duration,
        "nt": cfg.nt,
        "stop": result.stop.name(),
        "J_T": result.j_t,
        "error": result.error(),
        "max_increase": result.max_increase,
        "monotone": result.max_increase == 0.0,
        "records": result.iterations.len(),
        "evaluations": result.evaluations.len(),
        "metrics": metrics_json(&result.metrics),
        "ok": stop_exit_ok(result.stop),
    })
}

fn write(path: &Path, body: &str) -> Result<(), RunError> {
    fs::write(path, body).map_err(io_err(path))
}

/// Writes `results.csv`, `pulses.csv`, `weyl_path.csv` and `summary.json`.
/// Wall time goes to `timing.json` so the other files are reproducible.
pub fn persist(dir: &Path, cfg: &RunConfig, result: &OptimizationResult) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write(&dir.join("results.csv"), &results_csv(result))?;
    write(&dir.join("pulses.csv"), &pulses_csv(&result.fields))?;
    write(&dir.join("weyl_path.csv"), &weyl_path_csv(result))?;
    let summary = serde_json::to_string_pretty(&summary_json(cfg, result)).expect("serializable");
    write(&dir.join("summary.json"), &(summary + "\n"))?;
    let timing = json!({ "wall_time_s": result.wall_time.as_secs_f64() });
    write(&dir.join("timing.json"), &(timing.to_string() + "\n"))?;
    Ok(())
}

/// Runs, persists and returns the result.
pub fn run(cfg: &RunConfig) -> Result<OptimizationResult, RunError> {
    let result = execute(cfg)?;
    persist(&cfg.output_dir, cfg, &result)?;
    Ok(result)
}

/// Reads `pulses.csv` back into control fields on the configured grid.
pub fn read_pulses(path: &Path, grid: &TimeGrid) -> Result<Vec<ControlField>, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |m: String| RunError::Mismatch(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let labels: Vec<&str> = header.split(',').skip(1).collect();
    let mut columns = vec![Vec::new(); labels.len()];
    for (n, line) in lines.enumerate() {
        let mut cells = line.split(',');
        cells.next();
        for col in columns.iter_mut() {
            let cell = cells.next().ok_or_else(|| bad(format!("row {} is short", n + 2)))?;
            col.push(
                cell.parse::<f64>()
                    .map_err(|_| bad(format!("row {}: {cell:?} is not a number", n + 2)))?,
            );
        }
    }
    labels
        .iter()
        .zip(columns)
        .map(|(l, c)| Ok(ControlField::new(*l, *grid, c)?))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub metrics: GateMetrics,
    pub j_t: f64,
    /// `J_T` stored in `summary.json`, if present.
    pub recorded_j_t: Option<f64>,
}

impl Analysis {
    pub fn deviation(&self) -> Option<f64> {
        self.recorded_j_t.map(|r| (r - self.j_t).abs())
    }
}

/// Re-propagates the stored pulses of a run directory and recomputes its metrics.
pub fn analyze(cfg: &RunConfig, dir: &Path) -> Result<Analysis, RunError> {
    let model = cfg.model.build()?;
    let grid = grid_of(cfg)?;
    let fields = read_pulses(&dir.join("pulses.csv"), &grid)?;
    let gate = propagate_gate(&model, &fields, &grid)?;
    let summary_path = dir.join("summary.json");
    let summary: Option<serde_json::Value> = match fs::read_to_string(&summary_path) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| RunError::Mismatch(format!("{}: {e}", summary_path.display())))?,
        ),
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&summary_path)(e)),
    };
    let mut spec = cfg.functional;
    if let Some(w) = summary.as_ref().and_then(|s| s["w_final"].as_f64()) {
        spec.w = w;
    }
    let j_t = recorded_j_t(cfg, &spec, &gate)?;
    Ok(Analysis {
        metrics: gate_metrics(&gate, &spec)?,
        j_t,
        recorded_j_t: summary.and_then(|s| s["J_T"].as_f64()),
    })
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: String,
    pub result: OptimizationResult,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let m = &r.result.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.value,
            fmt_f64(r.result.error()),
            fmt_f64(r.result.j_t),
            fmt_f64(m.pop_loss),
            m.in_pe,
            fmt_f64(m.concurrence),
            r.result.stop.name()
        );
    }
    s
}

/// Splits `section.key=v1,v2,...` into the key and its values. Values keep
/// their own units; unitless values inherit the unit from the base config.
pub fn parse_sweep_arg(arg: &str) -> Result<(String, Vec<String>), ConfigError> {
    let (key, values) = arg.split_once('=').ok_or_else(|| ConfigError {
        key: arg.into(),
        message: "expected KEY=v1,v2,...".into(),
    })?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    Ok((key.trim().to_string(), values))
}

/// One run per value, each in `<out>/<key>=<value>/`, plus `<out>/sweep.csv`.
pub fn sweep(raw: &RawConfig, key: &str, values: &[String], out: &Path) -> Result<Vec<SweepRow>, RunError> {
    // Validate the base config before any value is tried.
    RunConfig::from_raw(raw)?;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut r = raw.clone();
        r.set(key, v)?;
        let mut cfg = RunConfig::from_raw(&r)?;
        cfg.output_dir = out.join(format!("{key}={v}").replace([' ', '/'], "_"));
        let result = run(&cfg)?;
        rows.push(SweepRow {
            value: v.clone(),
            result,
        });
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    write(&out.join("sweep.csv"), &sweep_csv(&rows))?;
    Ok(rows)
}
