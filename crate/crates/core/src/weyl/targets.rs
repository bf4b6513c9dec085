//! Named points of the Weyl chamber used as optimization targets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{canonical_gate, local_invariants, LocalInvariants, WeylPoint};
use crate::error::Error;
use crate::linalg::Gate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedTarget {
    Identity,
    A1,
    A2,
    A3,
    L,
    Q,
    M,
    P,
    N,
    B,
    Cnot,
    Swap,
}

impl NamedTarget {
    pub const ALL: [NamedTarget; 12] = [
        NamedTarget::Identity,
        NamedTarget::A1,
        NamedTarget::A2,
        NamedTarget::A3,
        NamedTarget::L,
        NamedTarget::Q,
        NamedTarget::M,
        NamedTarget::P,
        NamedTarget::N,
        NamedTarget::B,
        NamedTarget::Cnot,
        NamedTarget::Swap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NamedTarget::Identity => "identity",
            NamedTarget::A1 => "A1",
            NamedTarget::A2 => "A2",
            NamedTarget::A3 => "A3",
            NamedTarget::L => "L",
            NamedTarget::Q => "Q",
            NamedTarget::M => "M",
            NamedTarget::P => "P",
            NamedTarget::N => "N",
            NamedTarget::B => "B",
            NamedTarget::Cnot => "CNOT",
            NamedTarget::Swap => "SWAP",
        }
    }

    /// Chamber coordinates. `A1 = (pi, 0, 0)` is the far corner of the chamber
    /// and represents the same class as the identity.
    pub fn point(&self) -> WeylPoint {
        let h = PI / 2.0;
        let q = PI / 4.0;
        match self {
            NamedTarget::Identity => WeylPoint::new(0.0, 0.0, 0.0),
            NamedTarget::A1 => WeylPoint::new(PI, 0.0, 0.0),
            NamedTarget::A2 => WeylPoint::new(h, h, 0.0),
            NamedTarget::A3 | NamedTarget::Swap => WeylPoint::new(h, h, h),
            NamedTarget::L | NamedTarget::Cnot => WeylPoint::new(h, 0.0, 0.0),
            NamedTarget::Q => WeylPoint::new(q, q, 0.0),
            NamedTarget::M => WeylPoint::new(3.0 * q, q, 0.0),
            NamedTarget::P => WeylPoint::new(q, q, q),
            NamedTarget::N => WeylPoint::new(3.0 * q, q, q),
            NamedTarget::B => WeylPoint::new(h, q, 0.0),
        }
    }

    pub fn gate(&self) -> Gate {
        match self {
            NamedTarget::Cnot => Gate::cnot(),
            NamedTarget::Swap => Gate::swap(),
            NamedTarget::Identity => Gate::identity(),
            _ => canonical_gate(&self.point()),
        }
    }

    pub fn invariants(&self) -> LocalInvariants {
        local_invariants(&canonical_gate(&self.point())).expect("canonical gates are unitary")
    }

    pub fn is_perfect_entangler(&self) -> bool {
        super::in_pe_polyhedron(&self.point())
    }
}

impl fmt::Display for NamedTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedTarget::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown target {s:?}")))
    }
}
