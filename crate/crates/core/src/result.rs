//! Optimization results and the gate metrics reported for them.

use std::time::Duration;

use crate::error::Result;
use crate::linalg::{closest_unitary_with, logical_basis_states, population_loss, Gate, gate_from_states};
use crate::models::ModelSpec;
use crate::propagate::{propagate, ControlField, TimeGrid};
use crate::weyl::{
    chamber_error, d_pe, f_avg, f_lec, f_pe, gate_concurrence, in_pe_polyhedron, local_invariants,
    weyl_coordinates, FunctionalSpec, LocalInvariants, WeylPoint,
};

/// Propagates the logical basis and returns the projected gate `U~`.
pub fn propagate_gate(model: &ModelSpec, fields: &[ControlField], grid: &TimeGrid) -> Result<Gate> {
    let logical = model.logical_indices();
    let init = logical_basis_states(model.dim(), logical)?;
    let out = propagate(model, fields, grid, &init, false)?;
    gate_from_states(&out.final_states, logical)
}

/// Geometry and fidelity summary of a projected gate.
#[derive(Clone, Debug)]
pub struct GateMetrics {
    pub gate: Gate,
    pub closest: Gate,
    /// `||U~ - U||` with the configured norm.
    pub dist: f64,
    pub point: WeylPoint,
    pub invariants: LocalInvariants,
    pub in_pe: bool,
    pub f_pe: f64,
    pub f_pe_tilde: f64,
    /// `F~_LEC` towards the functional's target, if it has chamber coordinates.
    pub f_lec_tilde: Option<f64>,
    pub d_pe: f64,
    pub pop_loss: f64,
    pub concurrence: f64,
    /// Average gate fidelity of `U~` against its closest unitary.
    pub f_avg: f64,
    /// Chamber-space error `1 - F~` for the functional kind.
    pub error: f64,
}

impl GateMetrics {
    pub fn concurrence_error(&self) -> f64 {
        1.0 - self.concurrence
    }

    pub fn avg_error(&self) -> f64 {
        1.0 - self.f_avg
    }
}

/// Cheap metrics without the concurrence maximization.
pub fn gate_metrics_basic(gate: &Gate, spec: &FunctionalSpec) -> Result<GateMetrics> {
    let (closest, dist) = closest_unitary_with(gate, spec.norm)?;
    let point = weyl_coordinates(&closest)?;
    let invariants = local_invariants(gate)?;
    let f_pe_u = f_pe(&point);
    let f_lec_tilde = spec
        .target
        .as_ref()
        .and_then(|t| t.point().ok())
        .map(|p| f_lec(&point, &p) - dist);
    Ok(GateMetrics {
        gate: *gate,
        closest,
        dist,
        point,
        invariants,
        in_pe: in_pe_polyhedron(&point),
        f_pe: f_pe_u,
        f_pe_tilde: f_pe_u - dist,
        f_lec_tilde,
        d_pe: d_pe(&invariants),
        pop_loss: population_loss(gate),
        concurrence: f64::NAN,
        f_avg: f_avg(gate, &closest),
        error: chamber_error(gate, spec)?,
    })
}

/// Full metrics, including the concurrence of the closest unitary.
pub fn gate_metrics(gate: &Gate, spec: &FunctionalSpec) -> Result<GateMetrics> {
    let mut m = gate_metrics_basic(gate, spec)?;
    m.concurrence = gate_concurrence(&m.closest);
    Ok(m)
}

/// One outer iteration: a Krotov iteration or the best point after a CRAB restart.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j_total: f64,
    pub j_t: f64,
    pub error: f64,
    pub point: WeylPoint,
    pub invariants: LocalInvariants,
    pub pop_loss: f64,
    /// Second-order estimate used by Krotov; zero for CRAB.
    pub a: f64,
}

/// One candidate evaluated by the gradient-free search.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRecord {
    pub index: usize,
    pub restart: usize,
    /// Coordinates of the closest unitary, if it exists.
    pub point: Option<WeylPoint>,
    /// The maximized figure of merit `F~`.
    pub fidelity: f64,
    pub pop_loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Crab,
    Krotov,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Crab => "crab",
            Algorithm::Krotov => "krotov",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopCriterion {
    /// The functional reached its goal (inside the polyhedron, or error threshold met).
    Success,
    /// Relative change of `J_T` fell below the threshold.
    Converged,
    Budget,
    /// The iteration was stopped because `J` rose.
    MonotonicityViolation,
}

impl StopCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            StopCriterion::Success => "success",
            StopCriterion::Converged => "converged",
            StopCriterion::Budget => "budget",
            StopCriterion::MonotonicityViolation => "monotonicity_violation",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub algorithm: Algorithm,
    pub fields: Vec<ControlField>,
    pub iterations: Vec<IterationRecord>,
    pub evaluations: Vec<EvaluationRecord>,
    pub metrics: GateMetrics,
    /// Final value of the optimized functional (`1 - F~` for CRAB, `J~` for Krotov).
    pub j_t: f64,
    pub stop: StopCriterion,
    /// Largest observed `J` increase between iterations (0 if monotone).
    pub max_increase: f64,
    /// The functional as it stood at the end; Krotov's `w` adaptation may change `w`.
    pub functional: FunctionalSpec,
    pub wall_time: Duration,
}

impl OptimizationResult {
    pub fn error(&self) -> f64 {
        self.metrics.error
    }
}
