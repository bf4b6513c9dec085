//! Run configuration: a flat sectioned `key = value [unit]` text format.
//!
//! ```text
//! [model]
//! kind = transmon
//! omega1 = 4.380 GHz
//!
//! [grid]
//! T = 100 ns
//! nt = 2000
//! ```
//!
//! Cyclic frequencies (`GHz`, `MHz`, `kHz`) are converted to rad/ns; `rad/ns`
//! is taken as is. Times accept `ns` and `us`. Every key is consumed exactly
//! once while the typed config is built; anything left over is rejected.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::{Path, PathBuf};

use entangle_core::crab::{CrabConfig, Envelope, SimplexConfig};
use entangle_core::krotov::{KrotovConfig, Shape, WAdaptation};
use entangle_core::linalg::DistanceNorm;
use entangle_core::models::{
    build_charge, build_generic, build_nv, build_transmon, derive_jeff, ChargeParams,
    GenericParams, ModelSpec, NVParams, TransmonParams,
};
use entangle_core::weyl::{
    FunctionalKind, FunctionalSpec, LocalInvariants, LossWeight, NamedTarget, PeCost, Target,
    WeylPoint,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// `section.key`, or the section/line a problem was found at.
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed but untyped configuration.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("line {lineno}"), "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(err(format!("line {lineno}"), "empty section name"));
                }
                raw.sections.entry(name.to_string()).or_default();
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {lineno}"), "expected `key = value`"))?;
            let key = key.trim();
            let sec = section
                .clone()
                .ok_or_else(|| err(key, format!("line {lineno}: key outside of any section")))?;
            let path = format!("{sec}.{key}");
            let map = raw.sections.entry(sec).or_default();
            if map.contains_key(key) {
                return Err(err(path, format!("line {lineno}: duplicate key")));
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line: lineno,
                },
            );
        }
        Ok(raw)
    }

    /// Replaces (or adds) `section.key`. A unitless value inherits the unit of
    /// the value it replaces.
    pub fn set(&mut self, path: &str, value: &str) -> Result<(), ConfigError> {
        let (sec, key) = path
            .split_once('.')
            .ok_or_else(|| err(path, "expected `section.key`"))?;
        let map = self.sections.entry(sec.to_string()).or_default();
        let mut value = value.trim().to_string();
        if let Some(old) = map.get(key) {
            if let (Some(unit), None) = (split_unit(&old.value).1, split_unit(&value).1) {
                value = format!("{value} {unit}");
            }
        }
        map.insert(key.to_string(), Entry { value, line: 0 });
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        let (sec, key) = path.split_once('.')?;
        self.sections.get(sec)?.get(key).map(|e| e.value.as_str())
    }
}

/// Splits `"3.5 MHz"` into `("3.5", Some("MHz"))`.
fn split_unit(value: &str) -> (&str, Option<&str>) {
    match value.rsplit_once(char::is_whitespace) {
        Some((num, unit)) if unit.parse::<f64>().is_err() && !unit.ends_with(',') => {
            (num.trim(), Some(unit))
        }
        _ => (value, None),
    }
}

fn frequency_factor(unit: &str) -> Option<f64> {
    match unit {
        "GHz" => Some(TAU),
        "MHz" => Some(TAU * 1e-3),
        "kHz" => Some(TAU * 1e-6),
        "rad/ns" => Some(1.0),
        _ => None,
    }
}

fn time_factor(unit: &str) -> Option<f64> {
    match unit {
        "ns" => Some(1.0),
        "us" => Some(1e3),
        _ => None,
    }
}

/// Hands out typed values for one section and remembers which keys were read.
struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Section<'a> {
    fn new(raw: &RawConfig, name: &'a str) -> Self {
        Self {
            name,
            entries: raw.sections.get(name).cloned().unwrap_or_default(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn take(&mut self, key: &str) -> Option<(String, String)> {
        let path = self.path(key);
        self.entries.remove(key).map(|e| {
            let path = if e.line > 0 {
                format!("{path} (line {})", e.line)
            } else {
                path
            };
            (e.value, path)
        })
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn required_string(&mut self, key: &str) -> Result<String, ConfigError> {
        self.string(key)
            .ok_or_else(|| err(self.path(key), "missing required key"))
    }

    fn unitless(path: &str, value: &str) -> Result<f64, ConfigError> {
        if let (_, Some(unit)) = split_unit(value) {
            return Err(err(path, format!("unexpected unit {unit:?}")));
        }
        value
            .parse::<f64>()
            .map_err(|_| err(path, format!("{value:?} is not a number")))
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key)
            .map(|(v, p)| Self::unitless(&p, &v))
            .transpose()
    }

    fn float_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn uint(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.take(key)
            .map(|(v, p)| {
                v.parse::<usize>()
                    .map_err(|_| err(p, format!("{v:?} is not a non-negative integer")))
            })
            .transpose()
    }

    fn uint_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.uint(key)?.unwrap_or(default))
    }

    fn boolean_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((v, p)) => match v.as_str() {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => Err(err(p, format!("{v:?} is not a boolean"))),
            },
        }
    }

    fn scaled(path: &str, value: &str, factor: fn(&str) -> Option<f64>, what: &str) -> Result<f64, ConfigError> {
        let (num, unit) = split_unit(value);
        let unit = unit.ok_or_else(|| err(path, format!("{what} needs a unit")))?;
        let f = factor(unit).ok_or_else(|| err(path, format!("unknown {what} unit {unit:?}")))?;
        let x: f64 = num
            .parse()
            .map_err(|_| err(path, format!("{num:?} is not a number")))?;
        Ok(x * f)
    }

    fn frequency(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key)
            .map(|(v, p)| Self::scaled(&p, &v, frequency_factor, "frequency"))
            .transpose()
    }

    fn frequency_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.frequency(key)?.unwrap_or(default))
    }

    fn time(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key)
            .map(|(v, p)| Self::scaled(&p, &v, time_factor, "time"))
            .transpose()
    }

    /// Comma-separated frequencies; a trailing unit applies to every item
    /// without its own.
    fn frequency_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((v, p)) = self.take(key) else {
            return Ok(None);
        };
        let items: Vec<&str> = v.split(',').map(str::trim).collect();
        let last_unit = items.last().and_then(|s| split_unit(s).1).map(str::to_string);
        items
            .iter()
            .map(|item| {
                let with_unit = match (split_unit(item).1, &last_unit) {
                    (None, Some(u)) => format!("{item} {u}"),
                    _ => item.to_string(),
                };
                Self::scaled(&p, &with_unit, frequency_factor, "frequency")
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn float_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.take(key)
            .map(|(v, p)| v.split(',').map(|s| Self::unitless(&p, s.trim())).collect())
            .transpose()
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, e)) => Err(err(
                format!("{}.{key} (line {})", self.name, e.line),
                "unknown key",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Generic(GenericParams),
    Nv(NVParams),
    Charge(ChargeParams),
    Transmon(TransmonParams),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Generic(_) => "generic",
            ModelConfig::Nv(_) => "nv",
            ModelConfig::Charge(_) => "charge",
            ModelConfig::Transmon(_) => "transmon",
        }
    }

    pub fn build(&self) -> entangle_core::Result<ModelSpec> {
        match self {
            ModelConfig::Generic(p) => build_generic(p),
            ModelConfig::Nv(p) => build_nv(p),
            ModelConfig::Charge(p) => build_charge(p),
            ModelConfig::Transmon(p) => build_transmon(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Carrier {
    Fixed(f64),
    /// `(omega1 + omega2) / 2` of the transmon model.
    TwoPhoton,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GuessConfig {
    Zero,
    Constant(f64),
    Sin2 {
        peak: f64,
        carrier: Carrier,
        phase: f64,
    },
}

/// Seeded perturbation of the guess, applied per run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jitter {
    /// Relative amplitude spread, uniform in `[1 - a, 1 + a]`.
    pub amplitude: f64,
    /// Phase spread in radians, uniform in `[-p, p]`.
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerConfig {
    Crab(CrabConfig),
    Krotov(KrotovConfig),
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Crab(_) => "crab",
            OptimizerConfig::Krotov(_) => "krotov",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub duration: f64,
    pub nt: usize,
    pub functional: FunctionalSpec,
    pub optimizer: OptimizerConfig,
    pub guess: GuessConfig,
    pub jitter: Jitter,
    pub output_dir: PathBuf,
    pub record_all_evaluations: bool,
}

const SECTIONS: [&str; 7] = ["run", "model", "grid", "functional", "optimizer", "guess", "output"];

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let raw = load_raw(path)?;
    RunConfig::from_raw(&raw)
}

pub fn load_raw(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(path.display().to_string(), format!("cannot read: {e}")))?;
    RawConfig::parse(&text)
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        RunConfig::from_raw(&RawConfig::parse(text)?)
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        if let Some(unknown) = raw.sections.keys().find(|s| !SECTIONS.contains(&s.as_str())) {
            return Err(err(format!("[{unknown}]"), "unknown section"));
        }

        let mut run = Section::new(raw, "run");
        let seed = run
            .take("seed")
            .map(|(v, p)| v.parse::<u64>().map_err(|_| err(p, format!("{v:?} is not a seed"))))
            .transpose()?
            .unwrap_or(0);
        run.finish()?;

        let mut m = Section::new(raw, "model");
        let model = parse_model(&mut m)?;
        m.finish()?;

        let mut g = Section::new(raw, "grid");
        let duration = g
            .time("T")?
            .ok_or_else(|| err("grid.T", "missing required key"))?;
        if !(duration > 0.0) {
            return Err(err("grid.T", "duration must be positive"));
        }
        let nt = match (g.uint("nt")?, g.time("dt")?) {
            (Some(_), Some(_)) => return Err(err("grid.dt", "give either nt or dt, not both")),
            (Some(nt), None) => nt,
            (None, Some(dt)) if dt > 0.0 => (duration / dt).round().max(1.0) as usize,
            (None, Some(_)) => return Err(err("grid.dt", "time step must be positive")),
            (None, None) => return Err(err("grid.nt", "missing required key")),
        };
        if nt == 0 {
            return Err(err("grid.nt", "need at least one time step"));
        }
        g.finish()?;

        let mut f = Section::new(raw, "functional");
        let functional = parse_functional(&mut f)?;
        f.finish()?;

        let n_controls = model
            .build()
            .map_err(|e| err("model", e.to_string()))?
            .n_controls();

        let mut o = Section::new(raw, "optimizer");
        let optimizer = parse_optimizer(&mut o, &functional, n_controls)?;
        o.finish()?;

        let mut gs = Section::new(raw, "guess");
        let (guess, jitter) = parse_guess(&mut gs, &model)?;
        gs.finish()?;

        let mut out = Section::new(raw, "output");
        let output_dir = PathBuf::from(out.string("directory").unwrap_or_else(|| "out".into()));
        let record_default = matches!(optimizer, OptimizerConfig::Crab(_));
        let record_all_evaluations = out.boolean_or("record_all_evaluations", record_default)?;
        out.finish()?;

        let mut optimizer = optimizer;
        if let OptimizerConfig::Crab(c) = &mut optimizer {
            c.record_all_evaluations = record_all_evaluations;
        }

        Ok(RunConfig {
            seed,
            model,
            duration,
            nt,
            functional,
            optimizer,
            guess,
            jitter,
            output_dir,
            record_all_evaluations,
        })
    }
}

fn parse_model(s: &mut Section) -> Result<ModelConfig, ConfigError> {
    let kind = s.required_string("kind")?;
    match kind.as_str() {
        "generic" => {
            let omega1 = s
                .frequency("omega1")?
                .ok_or_else(|| err("model.omega1", "missing required key"))?;
            let omega2 = s
                .frequency("omega2")?
                .ok_or_else(|| err("model.omega2", "missing required key"))?;
            let lambda = s.float_or("lambda", 1.0)?;
            Ok(ModelConfig::Generic(GenericParams { omega1, omega2, lambda }))
        }
        "nv" => Ok(ModelConfig::Nv(NVParams {
            enable_delta_control: s.boolean_or("delta_control", false)?,
        })),
        "charge" => {
            let d = ChargeParams::default();
            let e_c = s.frequency_or("e_c", d.e_c)?;
            let n_g = s.float_or("n_g", d.n_g[0])?;
            let n_g1 = s.float_or("n_g1", n_g)?;
            let n_g2 = s.float_or("n_g2", n_g)?;
            let n_levels = s.uint_or("n_levels", d.n_levels)?;
            let single_pulse = s.boolean_or("single_pulse", d.single_pulse)?;
            if n_levels < 2 {
                return Err(err("model.n_levels", "need at least 2 levels"));
            }
            Ok(ModelConfig::Charge(ChargeParams {
                e_c,
                n_g: [n_g1, n_g2],
                n_levels,
                single_pulse,
            }))
        }
        "transmon" => {
            let d = TransmonParams::default();
            let omega1 = s.frequency_or("omega1", d.omega1)?;
            let omega2 = s.frequency_or("omega2", d.omega2)?;
            let alpha1 = s.frequency_or("alpha1", d.alpha1)?;
            let alpha2 = s.frequency_or("alpha2", d.alpha2)?;
            let lambda = s.float_or("lambda", d.lambda)?;
            let n_levels = s.uint_or("n_levels", d.n_levels)?;
            if n_levels < 2 {
                return Err(err("model.n_levels", "need at least 2 levels"));
            }
            let j_eff = s.frequency("j_eff")?;
            let cavity = (s.frequency("g1")?, s.frequency("g2")?, s.frequency("omega_r")?);
            let j_eff = match (j_eff, cavity) {
                (Some(j), (None, None, None)) => j,
                (None, (None, None, None)) => d.j_eff,
                (None, (Some(g1), Some(g2), Some(wr))) => derive_jeff(g1, g2, omega1, omega2, wr)
                    .map_err(|e| err("model.omega_r", e.to_string()))?,
                (Some(_), _) => {
                    return Err(err("model.j_eff", "give either j_eff or g1, g2 and omega_r"))
                }
                _ => return Err(err("model.g1", "g1, g2 and omega_r must be given together")),
            };
            Ok(ModelConfig::Transmon(TransmonParams {
                omega1,
                omega2,
                alpha1,
                alpha2,
                j_eff,
                lambda,
                n_levels,
            }))
        }
        other => Err(err(
            "model.kind",
            format!("unknown model {other:?} (generic, nv, charge, transmon)"),
        )),
    }
}

fn parse_triple(path: &str, value: &str) -> Result<[f64; 3], ConfigError> {
    let (body, unit) = split_unit(value);
    let factor = match unit {
        None | Some("rad") => 1.0,
        Some("pi") => PI,
        Some(u) => return Err(err(path, format!("unknown unit {u:?} (rad, pi)"))),
    };
    let items: Vec<&str> = body.split(',').map(str::trim).collect();
    if items.len() != 3 {
        return Err(err(path, format!("expected three comma-separated values, got {}", items.len())));
    }
    let mut out = [0.0; 3];
    for (o, s) in out.iter_mut().zip(items) {
        *o = s
            .parse::<f64>()
            .map_err(|_| err(path, format!("{s:?} is not a number")))?
            * factor;
    }
    Ok(out)
}

fn parse_functional(s: &mut Section) -> Result<FunctionalSpec, ConfigError> {
    let kind_str = s.required_string("kind")?;
    let kind: FunctionalKind = kind_str
        .parse()
        .map_err(|_| err("functional.kind", format!("unknown functional {kind_str:?}")))?;

    let named = s.string("target");
    let point = s.take("c").map(|(v, p)| parse_triple(&p, &v)).transpose()?;
    let inv = s.take("g").map(|(v, p)| {
        if split_unit(&v).1.is_some() {
            return Err(err(p, "invariants are unitless"));
        }
        parse_triple(&p, &v)
    });
    let inv = inv.transpose()?;
    let target = match (named, point, inv) {
        (None, None, None) => None,
        (Some(name), None, None) => Some(Target::Named(
            NamedTarget::ALL
                .into_iter()
                .find(|t| t.name().eq_ignore_ascii_case(&name))
                .ok_or_else(|| err("functional.target", format!("unknown target {name:?}")))?,
        )),
        (None, Some(c), None) => Some(Target::Point(WeylPoint::new(c[0], c[1], c[2]))),
        (None, None, Some(g)) => Some(Target::Invariants(LocalInvariants {
            g1: g[0],
            g2: g[1],
            g3: g[2],
        })),
        _ => return Err(err("functional.target", "give only one of target, c and g")),
    };
    if kind.needs_target() && target.is_none() {
        return Err(err(
            "functional.target",
            format!("functional {} needs a target (target, c or g)", kind.name()),
        ));
    }
    if kind.is_pe() && target.is_some() {
        return Err(err("functional.target", "perfect-entangler functionals take no target"));
    }

    let w = s.float_or("w", DEFAULT_W)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(err("functional.w", format!("w = {w} outside [0, 1]")));
    }
    let norm = match s.string("norm").as_deref() {
        None | Some("half_frobenius") => DistanceNorm::HalfFrobenius,
        Some("frobenius") => DistanceNorm::Frobenius,
        Some("spectral") => DistanceNorm::Spectral,
        Some(o) => {
            return Err(err(
                "functional.norm",
                format!("unknown norm {o:?} (half_frobenius, frobenius, spectral)"),
            ))
        }
    };
    let loss_weight = match s.string("loss_weight").as_deref() {
        None | Some("one_minus_w") => LossWeight::OneMinusW,
        Some("w_minus_one") => LossWeight::WMinusOne,
        Some(o) => {
            return Err(err(
                "functional.loss_weight",
                format!("unknown loss weight {o:?} (one_minus_w, w_minus_one)"),
            ))
        }
    };
    let pe_cost = match s.string("pe_cost").as_deref() {
        None | Some("saturated") => PeCost::Saturated,
        Some("raw") => PeCost::Raw,
        Some(o) => {
            return Err(err(
                "functional.pe_cost",
                format!("unknown PE cost {o:?} (saturated, raw)"),
            ))
        }
    };
    let spec = FunctionalSpec::new(kind, target, w)
        .map_err(|e| err("functional", e.to_string()))?
        .with_norm(norm)
        .with_loss_weight(loss_weight)
        .with_pe_cost(pe_cost);
    Ok(spec)
}

/// Weight of the gate functional against population loss when `w` is omitted.
pub const DEFAULT_W: f64 = 0.1;
/// Krotov step-size weight when `lambda_a` is omitted.
pub const DEFAULT_LAMBDA_A: f64 = 50.0;

fn broadcast(path: &str, values: Vec<f64>, n: usize) -> Result<Vec<f64>, ConfigError> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        k if k == n => Ok(values),
        k => Err(err(path, format!("expected 1 or {n} values, got {k}"))),
    }
}

fn parse_optimizer(
    s: &mut Section,
    functional: &FunctionalSpec,
    n_controls: usize,
) -> Result<OptimizerConfig, ConfigError> {
    let method = s.string("method").unwrap_or_else(|| {
        if functional.kind.is_ginvariant() {
            "krotov".into()
        } else {
            "crab".into()
        }
    });
    match method.as_str() {
        "krotov" => {
            if !functional.kind.is_ginvariant() {
                return Err(err(
                    "optimizer.method",
                    format!("krotov needs PE_ginvariant or LI_ginvariant, not {}", functional.kind),
                ));
            }
            let lambda = s
                .float_list("lambda_a")?
                .unwrap_or_else(|| vec![DEFAULT_LAMBDA_A]);
            let lambda = broadcast("optimizer.lambda_a", lambda, n_controls)?;
            if lambda.iter().any(|l| !(*l > 0.0)) {
                return Err(err("optimizer.lambda_a", "must be positive"));
            }
            let mut k = KrotovConfig::new(*functional, lambda);
            k.shape = match s.string("shape").as_deref() {
                None | Some("flattop") => Shape::FlatTop {
                    ramp: s.float_or("ramp", 0.1)?,
                },
                Some("sin2") => Shape::Sin2,
                Some("box") => Shape::Box,
                Some(o) => {
                    return Err(err(
                        "optimizer.shape",
                        format!("unknown shape {o:?} (flattop, sin2, box)"),
                    ))
                }
            };
            k.eps_a = s.float_or("eps_a", k.eps_a)?;
            k.second_order = s.boolean_or("second_order", k.second_order)?;
            k.max_iter = s.uint_or("max_iter", k.max_iter)?;
            k.rel_change_tol = s.float_or("rel_change_tol", k.rel_change_tol)?;
            k.window = s.uint_or("window", k.window)?;
            k.j_t_tol = s.float_or("j_t_tol", k.j_t_tol)?;
            k.stop_on_pe = s.boolean_or("stop_on_pe", k.stop_on_pe)?;
            k.monotonic_tol = s.float_or("monotonic_tol", k.monotonic_tol)?;
            k.abort_on_violation = s.boolean_or("abort_on_violation", k.abort_on_violation)?;
            let adapt = (
                s.float("w_adapt_threshold")?,
                s.float("w_adapt_factor")?,
                s.float("w_min")?,
            );
            k.w_adaptation = match adapt {
                (None, None, None) => None,
                (Some(threshold), Some(factor), Some(w_min)) => Some(WAdaptation {
                    threshold,
                    factor,
                    w_min,
                }),
                _ => {
                    return Err(err(
                        "optimizer.w_adapt_threshold",
                        "w_adapt_threshold, w_adapt_factor and w_min must be given together",
                    ))
                }
            };
            k.validate(n_controls)
                .map_err(|e| err("optimizer", e.to_string()))?;
            Ok(OptimizerConfig::Krotov(k))
        }
        "crab" => {
            if functional.kind.is_ginvariant() {
                return Err(err(
                    "optimizer.method",
                    format!("crab needs a chamber-space functional, not {}", functional.kind),
                ));
            }
            let scale = s
                .frequency_list("amplitude_scale")?
                .ok_or_else(|| err("optimizer.amplitude_scale", "missing required key"))?;
            let scale = broadcast("optimizer.amplitude_scale", scale, n_controls)?;
            let mut c = CrabConfig::new(scale);
            if let Some(b) = s.frequency_list("amplitude_bound")? {
                c.amplitude_bound = broadcast("optimizer.amplitude_bound", b, n_controls)?
                    .into_iter()
                    .map(Some)
                    .collect();
            }
            c.n_basis = s.uint_or("n_basis", c.n_basis)?;
            if c.n_basis == 0 {
                return Err(err("optimizer.n_basis", "need at least one basis function"));
            }
            c.penalty_weight = s.float_or("penalty_weight", c.penalty_weight)?;
            c.envelope = match s.string("envelope").as_deref() {
                None | Some("none") => Envelope::None,
                Some("sin2") => Envelope::Sin2,
                Some(o) => {
                    return Err(err(
                        "optimizer.envelope",
                        format!("unknown envelope {o:?} (none, sin2)"),
                    ))
                }
            };
            c.continue_after_success = s.boolean_or("continue_after_success", c.continue_after_success)?;
            let d = SimplexConfig::default();
            c.simplex = SimplexConfig {
                alpha: s.float_or("alpha", d.alpha)?,
                gamma: s.float_or("gamma", d.gamma)?,
                rho: s.float_or("rho", d.rho)?,
                sigma: s.float_or("sigma", d.sigma)?,
                max_evals: s.uint_or("max_evals", d.max_evals)?,
                f_tol: s.float_or("f_tol", d.f_tol)?,
                x_tol: s.float_or("x_tol", d.x_tol)?,
                restarts: s.uint_or("restarts", d.restarts)?,
            };
            c.simplex
                .validate()
                .map_err(|e| err("optimizer", e.to_string()))?;
            Ok(OptimizerConfig::Crab(c))
        }
        other => Err(err(
            "optimizer.method",
            format!("unknown optimizer {other:?} (crab, krotov)"),
        )),
    }
}

fn parse_guess(s: &mut Section, model: &ModelConfig) -> Result<(GuessConfig, Jitter), ConfigError> {
    let transmon = matches!(model, ModelConfig::Transmon(_));
    let default_kind = if transmon { "sin2" } else { "zero" };
    let kind = s.string("kind").unwrap_or_else(|| default_kind.into());
    let guess = match kind.as_str() {
        "zero" => GuessConfig::Zero,
        "constant" => GuessConfig::Constant(
            s.frequency("value")?
                .ok_or_else(|| err("guess.value", "missing required key"))?,
        ),
        "sin2" => {
            let peak = match s.frequency("peak")? {
                Some(p) => p,
                None if transmon => TAU * 35e-3,
                None => return Err(err("guess.peak", "missing required key")),
            };
            let carrier = match s.take("carrier") {
                Some((v, _)) if v == "two_photon" => {
                    if !transmon {
                        return Err(err("guess.carrier", "two_photon needs the transmon model"));
                    }
                    Carrier::TwoPhoton
                }
                Some((v, p)) => Carrier::Fixed(Section::scaled(&p, &v, frequency_factor, "frequency")?),
                None if transmon => Carrier::TwoPhoton,
                None => Carrier::Fixed(0.0),
            };
            let phase = s.float_or("phase", 0.0)?;
            GuessConfig::Sin2 { peak, carrier, phase }
        }
        other => {
            return Err(err(
                "guess.kind",
                format!("unknown guess {other:?} (zero, constant, sin2)"),
            ))
        }
    };
    let jitter = Jitter {
        amplitude: s.float_or("amplitude_jitter", 0.0)?,
        phase: s.float_or("phase_jitter", 0.0)?,
    };
    if !(0.0..1.0).contains(&jitter.amplitude) {
        return Err(err("guess.amplitude_jitter", "must lie in [0, 1)"));
    }
    if !(jitter.phase >= 0.0) {
        return Err(err("guess.phase_jitter", "must be non-negative"));
    }
    Ok((guess, jitter))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[model]
kind = transmon
[grid]
T = 100 ns
nt = 2000
[functional]
kind = PE_ginvariant
";

    #[test]
    fn minimal_transmon_config_uses_table_defaults() {
        let cfg: RunConfig = MINIMAL.parse().unwrap();
        let ModelConfig::Transmon(p) = cfg.model else {
            panic!("not a transmon")
        };
        let ghz = TAU;
        let mhz = TAU * 1e-3;
        assert!((p.omega1 - 4.380 * ghz).abs() < 1e-12);
        assert!((p.omega2 - 4.614 * ghz).abs() < 1e-12);
        assert!((p.alpha1 + 210.0 * mhz).abs() < 1e-12);
        assert!((p.alpha2 + 215.0 * mhz).abs() < 1e-12);
        assert!((p.j_eff + 3.0 * mhz).abs() < 1e-12);
        assert_eq!(p.lambda, 1.03);
        assert_eq!(p.n_levels, 3);
        assert!(matches!(cfg.optimizer, OptimizerConfig::Krotov(_)));
        assert_eq!(cfg.duration, 100.0);
        assert_eq!(cfg.nt, 2000);
        assert!(matches!(
            cfg.guess,
            GuessConfig::Sin2 { carrier: Carrier::TwoPhoton, .. }
        ));
    }

    #[test]
    fn units_are_converted() {
        let cfg: RunConfig = "
[model]
kind = transmon
omega1 = 4380 MHz
j_eff = -0.003 GHz
[grid]
T = 0.1 us
dt = 0.05 ns
[functional]
kind = PE_ginvariant
w = 0.3
[guess]
peak = 2 rad/ns
carrier = 4.5 GHz
"
        .parse()
        .unwrap();
        let ModelConfig::Transmon(p) = cfg.model else { panic!() };
        assert!((p.omega1 - 4.380 * TAU).abs() < 1e-9);
        assert!((p.j_eff + 3e-3 * TAU).abs() < 1e-12);
        assert_eq!(cfg.nt, 2000);
        assert_eq!(cfg.functional.w, 0.3);
        let GuessConfig::Sin2 { peak, carrier, .. } = cfg.guess else { panic!() };
        assert_eq!(peak, 2.0);
        assert_eq!(carrier, Carrier::Fixed(4.5 * TAU));
    }

    #[test]
    fn weight_outside_unit_interval_is_rejected() {
        let e = format!("{MINIMAL}w = 1.5\n").parse::<RunConfig>().unwrap_err();
        assert!(e.key.starts_with("functional.w"), "{e}");
    }

    #[test]
    fn lec_without_target_is_rejected() {
        let text = MINIMAL.replace("PE_ginvariant", "LEC_cspace") + "[optimizer]\namplitude_scale = 35 MHz\n";
        let e = text.parse::<RunConfig>().unwrap_err();
        assert_eq!(e.key, "functional.target", "{e}");
        let li = MINIMAL.replace("PE_ginvariant", "LI_ginvariant");
        assert_eq!(li.parse::<RunConfig>().unwrap_err().key, "functional.target");
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let e = format!("{MINIMAL}bogus = 1\n").parse::<RunConfig>().unwrap_err();
        assert!(e.key.starts_with("functional.bogus"), "{e}");
        assert_eq!(e.message, "unknown key");
        let e = format!("{MINIMAL}[extra]\n").parse::<RunConfig>().unwrap_err();
        assert_eq!(e.key, "[extra]");
        // CRAB keys are unknown to a Krotov run.
        let e = format!("{MINIMAL}[optimizer]\nrestarts = 3\n")
            .parse::<RunConfig>()
            .unwrap_err();
        assert!(e.key.starts_with("optimizer.restarts"), "{e}");
    }

    #[test]
    fn unit_errors_are_reported() {
        let missing = MINIMAL.replace("T = 100 ns", "T = 100");
        assert!(missing.parse::<RunConfig>().unwrap_err().message.contains("needs a unit"));
        let wrong = MINIMAL.replace("T = 100 ns", "T = 100 MHz");
        assert!(wrong.parse::<RunConfig>().unwrap_err().message.contains("unknown time unit"));
        let extra = format!("{MINIMAL}w = 0.5 MHz\n");
        assert!(extra.parse::<RunConfig>().unwrap_err().message.contains("unexpected unit"));
    }

    #[test]
    fn explicit_targets() {
        let text = "
[model]
kind = nv
[grid]
T = 5 us
nt = 100
[functional]
kind = LEC_cspace
c = 0.25, 0.25, 0 pi
[optimizer]
amplitude_scale = 50 MHz, 100 kHz
restarts = 2
";
        let cfg: RunConfig = text.parse().unwrap();
        assert_eq!(cfg.duration, 5000.0);
        let Some(Target::Point(p)) = cfg.functional.target else { panic!() };
        assert!((p.c1 - PI / 4.0).abs() < 1e-15 && p.c3 == 0.0);
        let OptimizerConfig::Crab(c) = cfg.optimizer else { panic!() };
        assert!((c.amplitude_scale[1] - TAU * 1e-4).abs() < 1e-15);
        assert_eq!(c.simplex.restarts, 2);
        assert!(c.record_all_evaluations);
        let both = text.replace("c = 0.25, 0.25, 0 pi", "c = 0.25, 0.25, 0 pi\ntarget = B");
        assert_eq!(both.parse::<RunConfig>().unwrap_err().key, "functional.target");
    }

    #[test]
    fn overrides_inherit_units() {
        let mut raw = RawConfig::parse(MINIMAL).unwrap();
        raw.set("grid.T", "200").unwrap();
        assert_eq!(raw.get("grid.T"), Some("200 ns"));
        assert_eq!(RunConfig::from_raw(&raw).unwrap().duration, 200.0);
    }

    #[test]
    fn malformed_lines() {
        assert!(RawConfig::parse("[model\nkind = nv").is_err());
        assert!(RawConfig::parse("kind = nv").is_err());
        assert!(RawConfig::parse("[model]\nkind nv").is_err());
        assert!(RawConfig::parse("[model]\nkind = nv\nkind = nv").is_err());
    }
}
