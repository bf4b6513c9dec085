//! Chopped random basis optimization: each control is a base pulse plus a
//! truncated sum of sines with randomized frequencies, and the coefficients
//! are searched with the downhill simplex.

pub mod simplex;

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{population_loss, Gate};
use crate::models::ModelSpec;
use crate::propagate::{ControlField, TimeGrid};
use crate::result::{
    gate_metrics, propagate_gate, Algorithm, EvaluationRecord, IterationRecord, OptimizationResult,
    StopCriterion,
};
use crate::weyl::{
    fidelity, local_invariants, weyl_coordinates, FunctionalKind, FunctionalSpec,
    LocalInvariants, WeylPoint,
};
pub use simplex::{minimize, SimplexConfig, SimplexResult, StopReason};

/// Random sine frequencies for one control, `w_i` drawn from
/// `2 pi / T [i - 1/2, i + 1/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrabBasis {
    pub frequencies: Vec<f64>,
    pub duration: f64,
}

impl CrabBasis {
    pub fn n(&self) -> usize {
        self.frequencies.len()
    }

    /// Band-centred frequencies `2 pi i / T`.
    pub fn principal(n: usize, duration: f64) -> Self {
        Self {
            frequencies: (1..=n).map(|i| 2.0 * PI * i as f64 / duration).collect(),
            duration,
        }
    }

    pub fn in_bands(&self) -> bool {
        let w0 = 2.0 * PI / self.duration;
        self.frequencies.iter().enumerate().all(|(k, &w)| {
            let i = (k + 1) as f64;
            w >= w0 * (i - 0.5) && w <= w0 * (i + 0.5)
        })
    }
}

pub fn sample_basis<R: Rng + ?Sized>(n: usize, duration: f64, rng: &mut R) -> Result<CrabBasis> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let w0 = 2.0 * PI / duration;
    let frequencies = (1..=n)
        .map(|i| w0 * (i as f64 - 0.5 + rng.random::<f64>()))
        .collect();
    Ok(CrabBasis {
        frequencies,
        duration,
    })
}

/// Optional window multiplying the sine expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Envelope {
    #[default]
    None,
    /// `sin^2(pi t / T)`.
    Sin2,
}

impl Envelope {
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        match self {
            Envelope::None => 1.0,
            Envelope::Sin2 => (PI * t / duration).sin().powi(2),
        }
    }
}

/// `u(t_j) = base(t_j) + env(t_j) sum_i c_i sin(w_i t_j)`.
pub fn assemble_field(
    label: &str,
    coeffs: &[f64],
    basis: &CrabBasis,
    grid: &TimeGrid,
    base: Option<&ControlField>,
    envelope: Envelope,
) -> Result<ControlField> {
    if coeffs.len() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: coeffs.len(),
        });
    }
    if let Some(b) = base {
        if b.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    let samples = (0..=grid.nt())
        .map(|j| {
            let t = grid.time(j);
            let s: f64 = coeffs
                .iter()
                .zip(&basis.frequencies)
                .map(|(c, w)| c * (w * t).sin())
                .sum();
            base.map_or(0.0, |b| b.samples()[j]) + envelope.value(t, grid.duration()) * s
        })
        .collect();
    ControlField::new(label, *grid, samples)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrabConfig {
    pub simplex: SimplexConfig,
    /// Sine components per control.
    pub n_basis: usize,
    /// Typical amplitude per control; initial simplex steps are 10% of it.
    pub amplitude_scale: Vec<f64>,
    /// Optional `|u(t)|` bound per control, enforced by a quadratic penalty.
    pub amplitude_bound: Vec<Option<f64>>,
    pub penalty_weight: f64,
    pub envelope: Envelope,
    pub continue_after_success: bool,
    pub record_all_evaluations: bool,
}

impl CrabConfig {
    pub fn new(amplitude_scale: Vec<f64>) -> Self {
        let n = amplitude_scale.len();
        Self {
            simplex: SimplexConfig::default(),
            n_basis: 8,
            amplitude_scale,
            amplitude_bound: vec![None; n],
            penalty_weight: 1.0,
            envelope: Envelope::None,
            continue_after_success: false,
            record_all_evaluations: true,
        }
    }
}

const SUCCESS_TOL: f64 = 1e-12;
/// Objective assigned to candidates whose gate has no closest unitary.
const FAILED_EVAL: f64 = 2.0;

struct Candidate {
    fields: Vec<ControlField>,
    objective: f64,
}

fn penalty(fields: &[ControlField], cfg: &CrabConfig) -> f64 {
    let mut p = 0.0;
    for (f, bound) in fields.iter().zip(&cfg.amplitude_bound) {
        if let Some(b) = bound {
            let over: f64 = f
                .samples()
                .iter()
                .map(|v| (v.abs() - b).max(0.0) / b)
                .map(|x| x * x)
                .sum();
            p += over / f.samples().len() as f64;
        }
    }
    cfg.penalty_weight * p
}

/// Optimizes `1 - F~` with the chamber-space functional `spec`.
/// `base` holds one guess pulse per control (empty for zero guesses).
pub fn optimize_crab<R: Rng + ?Sized>(
    model: &ModelSpec,
    grid: &TimeGrid,
    spec: &FunctionalSpec,
    cfg: &CrabConfig,
    base: &[ControlField],
    rng: &mut R,
) -> Result<OptimizationResult> {
    let start = Instant::now();
    if !matches!(spec.kind, FunctionalKind::PeCspace | FunctionalKind::LecCspace | FunctionalKind::Sm) {
        return Err(Error::FunctionalMismatch {
            kind: spec.kind.to_string(),
            reason: "CRAB optimizes chamber-space fidelities".into(),
        });
    }
    spec.validate()?;
    cfg.simplex.validate()?;
    let n_ctrl = model.n_controls();
    if cfg.amplitude_scale.len() != n_ctrl || cfg.amplitude_bound.len() != n_ctrl {
        return Err(Error::DimensionMismatch {
            expected: n_ctrl,
            got: cfg.amplitude_scale.len(),
        });
    }
    if !base.is_empty() && base.len() != n_ctrl {
        return Err(Error::DimensionMismatch {
            expected: n_ctrl,
            got: base.len(),
        });
    }
    let labels = model.control_labels();
    let target = if spec.kind == FunctionalKind::PeCspace && !cfg.continue_after_success {
        Some(SUCCESS_TOL)
    } else {
        None
    };

    let mut evaluations: Vec<EvaluationRecord> = Vec::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut eval_index = 0usize;
    let mut first_error: Option<Error> = None;
    let restarts = cfg.simplex.restarts.max(1);
    let mut last_reason = StopReason::MaxEvals;

    for restart in 0..restarts {
        let bases: Vec<CrabBasis> = (0..n_ctrl)
            .map(|_| sample_basis(cfg.n_basis, grid.duration(), rng))
            .collect::<Result<_>>()?;
        let build = |x: &[f64]| -> Result<Vec<ControlField>> {
            (0..n_ctrl)
                .map(|m| {
                    let coeffs = &x[m * cfg.n_basis..(m + 1) * cfg.n_basis];
                    assemble_field(&labels[m], coeffs, &bases[m], grid, base.get(m), cfg.envelope)
                })
                .collect()
        };
        let mut objective = |x: &[f64]| -> f64 {
            let fields = match build(x) {
                Ok(f) => f,
                Err(e) => {
                    first_error.get_or_insert(e);
                    return f64::INFINITY;
                }
            };
            let gate = match propagate_gate(model, &fields, grid) {
                Ok(g) => g,
                Err(e) => {
                    first_error.get_or_insert(e);
                    return f64::INFINITY;
                }
            };
            let (fid, point) = match fidelity(&gate, spec) {
                Ok(f) => (f, closest_point(&gate)),
                Err(_) => (1.0 - FAILED_EVAL, None),
            };
            let obj = 1.0 - fid + penalty(&fields, cfg);
            if cfg.record_all_evaluations {
                evaluations.push(EvaluationRecord {
                    index: eval_index,
                    restart,
                    point,
                    fidelity: fid,
                    pop_loss: population_loss(&gate),
                });
            }
            eval_index += 1;
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                best = Some(Candidate {
                    fields,
                    objective: obj,
                });
            }
            obj
        };
        let x0 = vec![0.0; n_ctrl * cfg.n_basis];
        let steps: Vec<f64> = (0..n_ctrl * cfg.n_basis)
            .map(|k| 0.1 * cfg.amplitude_scale[k / cfg.n_basis])
            .collect();
        let r = minimize(&mut objective, &x0, &steps, &cfg.simplex, target)?;
        if let Some(e) = first_error.take() {
            return Err(e);
        }
        let b = best.as_ref().expect("at least one evaluation");
        let gate = propagate_gate(model, &b.fields, grid)?;
        iterations.push(restart_record(restart, b.objective, &gate, spec)?);
        last_reason = r.reason;
        if r.reason == StopReason::TargetReached {
            break;
        }
    }

    let b = best.expect("at least one evaluation");
    let gate = propagate_gate(model, &b.fields, grid)?;
    let metrics = gate_metrics(&gate, spec)?;
    let j_t = 1.0 - fidelity(&gate, spec)?;
    let stop = if spec.kind == FunctionalKind::PeCspace && j_t <= SUCCESS_TOL {
        StopCriterion::Success
    } else if last_reason == StopReason::Converged {
        StopCriterion::Converged
    } else {
        StopCriterion::Budget
    };
    Ok(OptimizationResult {
        algorithm: Algorithm::Crab,
        fields: b.fields,
        iterations,
        evaluations,
        metrics,
        j_t,
        stop,
        max_increase: 0.0,
        functional: *spec,
        wall_time: start.elapsed(),
    })
}

fn closest_point(gate: &Gate) -> Option<WeylPoint> {
    let (u, _) = crate::linalg::closest_unitary(gate).ok()?;
    weyl_coordinates(&u).ok()
}

fn restart_record(iter: usize, objective: f64, gate: &Gate, spec: &FunctionalSpec) -> Result<IterationRecord> {
    let j_t = 1.0 - fidelity(gate, spec)?;
    Ok(IterationRecord {
        iter,
        j_total: objective,
        j_t,
        error: crate::weyl::chamber_error(gate, spec)?,
        point: closest_point(gate).unwrap_or(WeylPoint::new(f64::NAN, f64::NAN, f64::NAN)),
        invariants: local_invariants(gate)
            .unwrap_or(LocalInvariants::new(f64::NAN, f64::NAN, f64::NAN)),
        pop_loss: population_loss(gate),
        a: 0.0,
    })
}
