//! Two-qubit perfect-entangler gate synthesis.
//!
//! Weyl chamber geometry and local invariants ([`weyl`]), model Hamiltonians
//! ([`models`]), piecewise-constant propagation ([`propagate`]) and two
//! optimizers: a chopped-random-basis simplex search ([`crab`]) and Krotov's
//! method ([`krotov`]).
//!
//! Conventions: `hbar = 1`, energies in rad/ns, times in ns, and two-qubit
//! basis order `|q1 q2>` with `q1` the slowest index.

pub mod crab;
pub mod error;
pub mod krotov;
pub mod linalg;
pub mod models;
pub mod propagate;
pub mod result;
pub mod weyl;

pub use error::{Error, Result};
pub use linalg::{closest_unitary, population_loss, project_logical, expi_step, Gate, Operator};
pub use propagate::{propagate, ControlField, StateTrajectory, TimeGrid};
pub use weyl::{LocalInvariants, WeylPoint};
