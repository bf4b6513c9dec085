//! Krotov's method for the invariant-space functionals.
//!
//! Each iteration propagates the adjoint states backward under the old
//! fields, then sweeps forward updating one sample at a time: the sample at
//! `t_{j+1}` is updated from `chi_old(t_j)` and the freshly propagated
//! `phi_new(t_j)`, after which `phi_new` is advanced through interval `j`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{gate_from_states, logical_basis_states, population_loss, CMatrix, Gate};
use crate::models::ModelSpec;
use crate::propagate::{
    propagate_backward_with, propagate_with, step_derivatives, step_propagator, step_propagators, ControlField,
    StateTrajectory, TimeGrid,
};
use crate::result::{
    gate_metrics, gate_metrics_basic, Algorithm, IterationRecord, OptimizationResult, StopCriterion,
};
use crate::weyl::{closest_in_pe, j_gradient_states, j_tilde, FunctionalKind, FunctionalSpec};

/// Update shape `S(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// `S = 1` with `sin^2` ramps over `ramp` (fraction of `T`) at both ends.
    FlatTop { ramp: f64 },
    /// `sin^2(pi t / T)`.
    Sin2,
    /// `S = 1` except `S(0) = S(T) = 0`.
    Box,
}

impl Default for Shape {
    fn default() -> Self {
        Shape::FlatTop { ramp: 0.1 }
    }
}

impl Shape {
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        if t <= 0.0 || t >= duration {
            return 0.0;
        }
        match *self {
            Shape::FlatTop { ramp } => {
                let r = ramp * duration;
                if r <= 0.0 {
                    1.0
                } else if t < r {
                    (PI * t / (2.0 * r)).sin().powi(2)
                } else if t > duration - r {
                    (PI * (duration - t) / (2.0 * r)).sin().powi(2)
                } else {
                    1.0
                }
            }
            Shape::Sin2 => (PI * t / duration).sin().powi(2),
            Shape::Box => 1.0,
        }
    }

    pub fn sample(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.times()
            .iter()
            .map(|&t| self.value(t, grid.duration()))
            .collect()
    }
}

/// Opt-in schedule lowering `w` (raising the loss weight) while the
/// population loss exceeds `threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WAdaptation {
    pub threshold: f64,
    pub factor: f64,
    pub w_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrotovConfig {
    pub functional: FunctionalSpec,
    /// Step-size weight per control.
    pub lambda_a: Vec<f64>,
    pub shape: Shape,
    pub eps_a: f64,
    /// Whether the second-order `sigma(t)` term is used.
    pub second_order: bool,
    pub max_iter: usize,
    /// Stop once the relative change of `J_T` over `window` iterations is below this.
    pub rel_change_tol: f64,
    pub window: usize,
    /// Stop once `J_T` drops below this value.
    pub j_t_tol: f64,
    /// Stop as soon as the closest unitary enters the polyhedron (PE kinds).
    pub stop_on_pe: bool,
    pub w_adaptation: Option<WAdaptation>,
    /// Absolute tolerance on `J` increases before flagging a violation.
    pub monotonic_tol: f64,
    /// Stop at the first violation instead of only recording it.
    pub abort_on_violation: bool,
}

impl KrotovConfig {
    pub fn new(functional: FunctionalSpec, lambda_a: Vec<f64>) -> Self {
        Self {
            functional,
            lambda_a,
            shape: Shape::default(),
            eps_a: 0.0,
            second_order: true,
            max_iter: 100,
            rel_change_tol: 0.0,
            window: 5,
            j_t_tol: 0.0,
            stop_on_pe: false,
            w_adaptation: None,
            monotonic_tol: 1e-12,
            abort_on_violation: false,
        }
    }

    pub fn validate(&self, n_controls: usize) -> Result<()> {
        if !self.functional.kind.is_ginvariant() {
            return Err(Error::FunctionalMismatch {
                kind: self.functional.kind.to_string(),
                reason: "Krotov needs an invariant-space functional".into(),
            });
        }
        self.functional.validate()?;
        if self.lambda_a.len() != n_controls {
            return Err(Error::DimensionMismatch {
                expected: n_controls,
                got: self.lambda_a.len(),
            });
        }
        if self.lambda_a.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("lambda_a must be positive".into()));
        }
        if !(self.eps_a >= 0.0) {
            return Err(Error::InvalidParameter("eps_a must be non-negative".into()));
        }
        if let Shape::FlatTop { ramp } = self.shape {
            if !(0.0..=0.5).contains(&ramp) {
                return Err(Error::InvalidParameter(format!(
                    "flat-top ramp fraction {ramp} outside [0, 0.5]"
                )));
            }
        }
        Ok(())
    }
}

/// Adjoint states for all grid points, propagated backward from `chi_t`.
pub fn backward_propagate(
    model: &ModelSpec,
    fields: &[ControlField],
    grid: &TimeGrid,
    chi_t: &CMatrix,
) -> Result<StateTrajectory> {
    let props = step_propagators(model, fields, grid)?;
    Ok(propagate_backward_with(&props, grid, chi_t, true)
        .trajectory
        .expect("stored"))
}

fn sum_re_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Second-order coefficient estimate
/// `A = [sum 2 Re<chi(T)|dphi(T)> + J_new - J_old] / sum ||dphi(T)||^2`.
pub fn compute_a(
    chi_t: &CMatrix,
    phi_new: &CMatrix,
    phi_old: &CMatrix,
    j_new: f64,
    j_old: f64,
) -> f64 {
    let dphi = phi_new - phi_old;
    let denom = dphi.norm_squared();
    if denom < 1e-30 {
        return 0.0;
    }
    (2.0 * sum_re_overlap(chi_t, &dphi) + j_new - j_old) / denom
}

/// `sum_k <a_k| op |b_k>` over state columns.
fn sum_overlap(a: &CMatrix, op_b: &CMatrix) -> Complex64 {
    a.iter().zip(op_b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Output of one sequential update sweep.
#[derive(Clone, Debug)]
pub struct UpdateSweep {
    pub fields: Vec<ControlField>,
    pub forward: StateTrajectory,
    pub propagators: Vec<CMatrix>,
    /// `sum_m sum_j (lambda_m / S_j) du_j^2 dt`.
    pub running_cost: f64,
}

/// Updates all fields in one forward sweep. `sigma` is the second-order
/// coefficient (zero disables the term).
///
/// The first-order term for sample `j+1` is the exact gradient of the
/// midpoint-sampled propagation: the mean of `Im <chi(t_{k+1})| D_k |phi(t_k)>`
/// over the two intervals `k = j, j+1` that share the sample, with `D_k` from
/// [`step_derivatives`]. The state entering interval `j+1` is predicted with
/// the old propagator. For small `dt` this is `Im <chi(t)| C |phi(t)>`.
pub fn krotov_update_step(
    model: &ModelSpec,
    fields: &[ControlField],
    chi: &StateTrajectory,
    phi_old: &StateTrajectory,
    shape: &[f64],
    lambda_a: &[f64],
    sigma: f64,
) -> Result<UpdateSweep> {
    let grid = *fields
        .first()
        .map(|f| f.grid())
        .ok_or_else(|| Error::InvalidParameter("no control fields".into()))?;
    let nt = grid.nt();
    let dt = grid.dt();
    let n_ctrl = fields.len();
    if chi.states.len() != nt + 1 || phi_old.states.len() != nt + 1 || shape.len() != nt + 1 {
        return Err(Error::GridMismatch);
    }
    let ops: Vec<&CMatrix> = model.controls().iter().map(|(op, _)| op.matrix()).collect();

    // eta[k][m] = D_km^dag chi(t_{k+1}) under the old fields
    let mut old_props = Vec::with_capacity(nt);
    let mut eta: Vec<Vec<CMatrix>> = Vec::with_capacity(nt);
    for k in 0..nt {
        let amps: Vec<f64> = fields.iter().map(|f| f.midpoint(k)).collect();
        let (u, ds) = step_derivatives(model, &amps, dt)?;
        eta.push(ds.iter().map(|d| d.adjoint() * chi.at(k + 1)).collect());
        old_props.push(u);
    }

    let mut samples: Vec<Vec<f64>> = fields.iter().map(|f| f.samples().to_vec()).collect();
    let mut phi = phi_old.at(0).clone();
    let mut states = Vec::with_capacity(nt + 1);
    states.push(phi.clone());
    let mut props = Vec::with_capacity(nt);
    let mut cost = 0.0;
    let mut apply = |samples: &mut Vec<Vec<f64>>, j: usize, m: usize, g: f64| {
        if shape[j] > 0.0 {
            let d = shape[j] / lambda_a[m] * g;
            samples[m][j] += d;
            cost += lambda_a[m] / shape[j] * d * d * dt;
        }
    };

    for m in 0..n_ctrl {
        let g = 0.5 * sum_overlap(&eta[0][m], &phi).im;
        apply(&mut samples, 0, m, g);
    }
    let mut amps = vec![0.0; n_ctrl];
    for j in 0..nt {
        let pred = &old_props[j] * &phi;
        for m in 0..n_ctrl {
            let mut g = sum_overlap(&eta[j][m], &phi).im;
            if j + 1 < nt {
                g += sum_overlap(&eta[j + 1][m], &pred).im;
            }
            g *= 0.5;
            if sigma != 0.0 {
                let dphi = &pred - phi_old.at(j + 1);
                g += 0.5 * sigma * sum_overlap(&dphi, &(ops[m] * &pred)).im;
            }
            apply(&mut samples, j + 1, m, g);
            amps[m] = 0.5 * (samples[m][j] + samples[m][j + 1]);
        }
        let p = step_propagator(model, &amps, dt)?;
        phi = &p * &phi;
        states.push(phi.clone());
        props.push(p);
    }
    let new_fields = fields
        .iter()
        .zip(samples)
        .map(|(f, s)| ControlField::new(f.label(), grid, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(UpdateSweep {
        fields: new_fields,
        forward: StateTrajectory { grid, states },
        propagators: props,
        running_cost: cost,
    })
}

fn final_gate(model: &ModelSpec, traj: &StateTrajectory) -> Result<Gate> {
    gate_from_states(traj.final_states(), model.logical_indices())
}

fn reached_goal(gate: &Gate, spec: &FunctionalSpec) -> Result<bool> {
    if spec.kind != FunctionalKind::PeGinvariant {
        return Ok(false);
    }
    closest_in_pe(gate)
}

fn iteration_record(
    iter: usize,
    j_total: f64,
    j_t: f64,
    a: f64,
    gate: &Gate,
    spec: &FunctionalSpec,
) -> Result<IterationRecord> {
    let m = gate_metrics_basic(gate, spec)?;
    Ok(IterationRecord {
        iter,
        j_total,
        j_t,
        error: m.error,
        point: m.point,
        invariants: m.invariants,
        pop_loss: m.pop_loss,
        a,
    })
}

/// Runs Krotov iterations from the guess fields.
pub fn optimize_krotov(
    model: &ModelSpec,
    grid: &TimeGrid,
    guess: &[ControlField],
    cfg: &KrotovConfig,
) -> Result<OptimizationResult> {
    let start = Instant::now();
    cfg.validate(model.n_controls())?;
    if guess.len() != model.n_controls() {
        return Err(Error::DimensionMismatch {
            expected: model.n_controls(),
            got: guess.len(),
        });
    }
    let mut spec = cfg.functional;
    let shape = cfg.shape.sample(grid);
    let init = logical_basis_states(model.dim(), model.logical_indices())?;

    let mut fields = guess.to_vec();
    let mut props = step_propagators(model, &fields, grid)?;
    let mut phi = propagate_with(&props, grid, &init, true)
        .trajectory
        .expect("stored");
    let mut gate = final_gate(model, &phi)?;
    let mut j_t = j_tilde(&gate, &spec)?;
    let mut iterations = vec![iteration_record(0, j_t, j_t, 0.0, &gate, &spec)?];
    let mut a_prev: Option<f64> = None;
    let mut max_increase = 0.0_f64;
    let mut stop = StopCriterion::Budget;

    let goal = |gate: &Gate, j_t: f64, spec: &FunctionalSpec| -> Result<bool> {
        Ok(j_t <= cfg.j_t_tol || (cfg.stop_on_pe && reached_goal(gate, spec)?))
    };

    if goal(&gate, j_t, &spec)? {
        stop = StopCriterion::Success;
    } else {
        for iter in 1..=cfg.max_iter {
            let chi_t = j_gradient_states(phi.final_states(), model.logical_indices(), &spec)?;
            let chi = propagate_backward_with(&props, grid, &chi_t, true)
                .trajectory
                .expect("stored");
            let sigma = if cfg.second_order {
                match a_prev {
                    None => -cfg.eps_a,
                    Some(a) => -(cfg.eps_a.max(2.0 * a + cfg.eps_a)),
                }
            } else {
                0.0
            };
            let sweep = krotov_update_step(model, &fields, &chi, &phi, &shape, &cfg.lambda_a, sigma)?;
            let gate_new = final_gate(model, &sweep.forward)?;
            let j_new = j_tilde(&gate_new, &spec)?;
            let a = compute_a(&chi_t, sweep.forward.final_states(), phi.final_states(), j_new, j_t);
            let j_total = j_new + sweep.running_cost;
            let increase = j_total - j_t;
            let violated = increase > cfg.monotonic_tol;
            if violated {
                max_increase = max_increase.max(increase);
            }
            a_prev = Some(a);
            fields = sweep.fields;
            props = sweep.propagators;
            phi = sweep.forward;
            gate = gate_new;
            j_t = j_new;
            iterations.push(iteration_record(iter, j_total, j_t, a, &gate, &spec)?);

            if violated && cfg.abort_on_violation {
                stop = StopCriterion::MonotonicityViolation;
                break;
            }
            if let Some(ad) = cfg.w_adaptation {
                if population_loss(&gate) > ad.threshold && spec.w > ad.w_min {
                    spec.w = (spec.w * ad.factor).max(ad.w_min);
                    j_t = j_tilde(&gate, &spec)?;
                }
            }
            if goal(&gate, j_t, &spec)? {
                stop = StopCriterion::Success;
                break;
            }
            if cfg.rel_change_tol > 0.0 && iterations.len() > cfg.window {
                let past = iterations[iterations.len() - 1 - cfg.window].j_t;
                let rel = (past - j_t).abs() / j_t.abs().max(f64::MIN_POSITIVE);
                if rel < cfg.rel_change_tol {
                    stop = StopCriterion::Converged;
                    break;
                }
            }
        }
    }
    if max_increase > 0.0 && stop != StopCriterion::MonotonicityViolation && cfg.abort_on_violation {
        stop = StopCriterion::MonotonicityViolation;
    }
    let metrics = gate_metrics(&gate, &spec)?;
    Ok(OptimizationResult {
        algorithm: Algorithm::Krotov,
        fields,
        iterations,
        evaluations: Vec::new(),
        metrics,
        j_t,
        stop,
        max_increase,
        functional: spec,
        wall_time: start.elapsed(),
    })
}
