//! Time grids, sampled control fields, and piecewise-constant propagation.
//!
//! Interval `j` spans `[t_j, t_{j+1}]` and uses the Hamiltonian at the midpoint
//! amplitude `(u[j] + u[j+1]) / 2`.

use crate::error::{Error, Result};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::linalg::{expi_hermitian, expi_real_symmetric, CMatrix};
use crate::models::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t: f64,
    nt: usize,
}

impl TimeGrid {
    pub fn new(t: f64, nt: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {t}"
            )));
        }
        if nt == 0 {
            return Err(Error::InvalidParameter("need at least one interval".into()));
        }
        Ok(Self { t, nt })
    }

    pub fn duration(&self) -> f64 {
        self.t
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.t / self.nt as f64
    }

    /// Time of grid point `j`, with `time(nt) == duration()` exactly.
    pub fn time(&self, j: usize) -> f64 {
        if j == self.nt {
            self.t
        } else {
            self.t * j as f64 / self.nt as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|j| self.time(j)).collect()
    }
}

/// Real control amplitude (rad/ns) sampled at the `nt + 1` grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    label: String,
    grid: TimeGrid,
    samples: Vec<f64>,
}

impl ControlField {
    pub fn new(label: impl Into<String>, grid: TimeGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.nt() + 1 {
            return Err(Error::DimensionMismatch {
                expected: grid.nt() + 1,
                got: samples.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "control sample {bad} is not finite"
            )));
        }
        Ok(Self {
            label: label.into(),
            grid,
            samples,
        })
    }

    pub fn zeros(label: impl Into<String>, grid: TimeGrid) -> Self {
        Self {
            label: label.into(),
            grid,
            samples: vec![0.0; grid.nt() + 1],
        }
    }

    pub fn from_fn(label: impl Into<String>, grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.times().into_iter().map(f).collect();
        Self::new(label, grid, samples)
    }

    pub fn constant(label: impl Into<String>, grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(label, grid, vec![value; grid.nt() + 1])
    }

    /// `peak sin^2(pi t / T) cos(carrier t + phase)`.
    pub fn sin2_pulse(
        label: impl Into<String>,
        grid: TimeGrid,
        peak: f64,
        carrier: f64,
        phase: f64,
    ) -> Result<Self> {
        let duration = grid.duration();
        Self::from_fn(label, grid, |t| {
            peak * (std::f64::consts::PI * t / duration).sin().powi(2) * (carrier * t + phase).cos()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        0.5 * (self.samples[j] + self.samples[j + 1])
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Propagated states at every grid point: `states[j]` is `dim x k`.
#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<CMatrix>,
}

impl StateTrajectory {
    pub fn at(&self, j: usize) -> &CMatrix {
        &self.states[j]
    }

    pub fn final_states(&self) -> &CMatrix {
        self.states.last().expect("trajectory holds nt + 1 entries")
    }
}

fn check_fields(model: &ModelSpec, fields: &[ControlField], grid: &TimeGrid) -> Result<()> {
    if fields.len() != model.n_controls() {
        return Err(Error::DimensionMismatch {
            expected: model.n_controls(),
            got: fields.len(),
        });
    }
    if fields.iter().any(|f| f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `exp(-i H dt)` for the Hamiltonian with the given control amplitudes.
pub fn step_propagator(model: &ModelSpec, amplitudes: &[f64], dt: f64) -> Result<CMatrix> {
    if amplitudes.len() != model.n_controls() {
        return Err(Error::DimensionMismatch {
            expected: model.n_controls(),
            got: amplitudes.len(),
        });
    }
    if let Some((drift, controls)) = model.real_parts() {
        let mut h = drift.clone();
        for (op, &a) in controls.iter().zip(amplitudes) {
            if a != 0.0 {
                h += op * a;
            }
        }
        Ok(expi_real_symmetric(&h, dt))
    } else {
        let h = model.hamiltonian(amplitudes)?;
        Ok(expi_hermitian(h.matrix(), dt))
    }
}

/// `exp(-i H dt)` together with `D_m = (i/dt) dU/du_m` for every control.
///
/// In the eigenbasis of `H`, `D_m` is `C_m` weighted by
/// `exp(-i (e_a + e_b) dt/2) sinc((e_a - e_b) dt/2)`, which reduces to
/// `C_m` as `dt -> 0`.
pub fn step_derivatives(
    model: &ModelSpec,
    amplitudes: &[f64],
    dt: f64,
) -> Result<(CMatrix, Vec<CMatrix>)> {
    let h = model.hamiltonian(amplitudes)?;
    let eig = SymmetricEigen::new(h.matrix().clone());
    let v = &eig.eigenvectors;
    let e = &eig.eigenvalues;
    let n = model.dim();
    let mut scaled = v.clone();
    for (m, &l) in e.iter().enumerate() {
        let p = Complex64::from_polar(1.0, -l * dt);
        for j in 0..n {
            scaled[(j, m)] *= p;
        }
    }
    let u = scaled * v.adjoint();
    let weights = CMatrix::from_fn(n, n, |a, b| {
        let x = 0.5 * (e[a] - e[b]) * dt;
        let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        Complex64::from_polar(sinc, -0.5 * (e[a] + e[b]) * dt)
    });
    let ds = model
        .controls()
        .iter()
        .map(|(op, _)| {
            let mt = v.adjoint() * op.matrix() * v;
            v * mt.component_mul(&weights) * v.adjoint()
        })
        .collect();
    Ok((u, ds))
}

/// Step propagator of interval `j`.
pub fn interval_propagator(model: &ModelSpec, fields: &[ControlField], j: usize) -> Result<CMatrix> {
    let amps: Vec<f64> = fields.iter().map(|f| f.midpoint(j)).collect();
    step_propagator(model, &amps, fields[0].grid().dt())
}

/// Step propagators for all `nt` intervals.
pub fn step_propagators(
    model: &ModelSpec,
    fields: &[ControlField],
    grid: &TimeGrid,
) -> Result<Vec<CMatrix>> {
    check_fields(model, fields, grid)?;
    if fields.is_empty() {
        let p = step_propagator(model, &[], grid.dt())?;
        return Ok(vec![p; grid.nt()]);
    }
    (0..grid.nt())
        .map(|j| interval_propagator(model, fields, j))
        .collect()
}

fn check_states(model: &ModelSpec, states: &CMatrix) -> Result<()> {
    if states.nrows() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: states.nrows(),
        });
    }
    Ok(())
}

/// Output of a propagation: final states and, if requested, the trajectory.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub final_states: CMatrix,
    pub trajectory: Option<StateTrajectory>,
}

/// Forward propagation of the columns of `initial` from `t = 0` to `T`.
pub fn propagate(
    model: &ModelSpec,
    fields: &[ControlField],
    grid: &TimeGrid,
    initial: &CMatrix,
    store: bool,
) -> Result<Propagation> {
    check_states(model, initial)?;
    let props = step_propagators(model, fields, grid)?;
    Ok(propagate_with(&props, grid, initial, store))
}

/// Forward propagation with precomputed step propagators.
pub fn propagate_with(
    props: &[CMatrix],
    grid: &TimeGrid,
    initial: &CMatrix,
    store: bool,
) -> Propagation {
    let mut psi = initial.clone();
    let mut states = if store {
        let mut v = Vec::with_capacity(props.len() + 1);
        v.push(psi.clone());
        v
    } else {
        Vec::new()
    };
    for p in props {
        psi = p * &psi;
        if store {
            states.push(psi.clone());
        }
    }
    Propagation {
        final_states: psi,
        trajectory: store.then_some(StateTrajectory {
            grid: *grid,
            states,
        }),
    }
}

/// Backward propagation of `final_states` from `T` to `0` using the inverse
/// step propagators `exp(+i H dt)`.
pub fn propagate_backward(
    model: &ModelSpec,
    fields: &[ControlField],
    grid: &TimeGrid,
    final_states: &CMatrix,
    store: bool,
) -> Result<Propagation> {
    check_states(model, final_states)?;
    let props = step_propagators(model, fields, grid)?;
    Ok(propagate_backward_with(&props, grid, final_states, store))
}

pub fn propagate_backward_with(
    props: &[CMatrix],
    grid: &TimeGrid,
    final_states: &CMatrix,
    store: bool,
) -> Propagation {
    let mut chi = final_states.clone();
    let mut rev = Vec::with_capacity(if store { props.len() + 1 } else { 0 });
    if store {
        rev.push(chi.clone());
    }
    for p in props.iter().rev() {
        chi = p.adjoint() * &chi;
        if store {
            rev.push(chi.clone());
        }
    }
    rev.reverse();
    Propagation {
        final_states: chi,
        trajectory: store.then_some(StateTrajectory {
            grid: *grid,
            states: rev,
        }),
    }
}

/// Full-space evolution operator `P(T, 0)`.
pub fn evolution_operator(model: &ModelSpec, fields: &[ControlField], grid: &TimeGrid) -> Result<CMatrix> {
    let dim = model.dim();
    Ok(propagate(model, fields, grid, &CMatrix::identity(dim, dim), false)?.final_states)
}
