//! Analytic Wirtinger gradients of the invariant-space costs.
//!
//! `G1` and `G2` are holomorphic in the entries of `U~`, so a real cost
//! `J(G, G*)` has `dJ/dU~* = dJ/dG* conj(dG/dU~)`.

use num_complex::Complex64;

use super::{
    complex_invariants, magic_basis, to_magic, FunctionalKind, FunctionalSpec, PeCost,
    DET_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::linalg::{gate_from_states, CMatrix, Gate, Matrix4c};

/// Holomorphic derivatives `dG1/dU~` and `dG2/dU~` (entrywise).
pub fn invariant_derivatives(gate: &Gate) -> Result<(Matrix4c, Matrix4c)> {
    let det = gate.det();
    if !(det.norm() > DET_THRESHOLD) {
        return Err(Error::DeterminantTooSmall { det: det.norm() });
    }
    let inv_t = gate
        .0
        .try_inverse()
        .ok_or(Error::DeterminantTooSmall { det: det.norm() })?
        .transpose();
    let (g1, g2) = complex_invariants(gate)?;
    let q = magic_basis();
    let ub = to_magic(gate);
    let m = ub.transpose() * ub;
    let tau = m.trace();
    // derivatives with respect to the magic-basis entries
    let d_tau_b = ub * Complex64::new(2.0, 0.0);
    let d_tr2_b = ub * m * Complex64::new(4.0, 0.0);
    let to_comp = |f: Matrix4c| q.conjugate() * f * q.transpose();
    let d_tau = to_comp(d_tau_b);
    let d_tr2 = to_comp(d_tr2_b);
    let dg1 = d_tau * (2.0 * tau / (16.0 * det)) - inv_t * g1;
    let dg2 = (d_tau * (2.0 * tau) - d_tr2) / (4.0 * det) - inv_t * g2;
    Ok((dg1, dg2))
}

const MODULUS_GUARD: f64 = 1e-14;

/// `dJ_core/dU~*` for the invariant-space kinds.
pub fn core_gradient(gate: &Gate, spec: &FunctionalSpec) -> Result<Matrix4c> {
    let (g1, g2) = complex_invariants(gate)?;
    let (dg1, dg2) = invariant_derivatives(gate)?;
    let c1 = dg1.conjugate();
    let c2 = dg2.conjugate();
    match spec.kind {
        FunctionalKind::LiGinvariant => {
            let o = spec.target_invariants()?;
            let o1 = Complex64::new(o.g1, o.g2);
            Ok(c1 * (g1 - o1) + c2 * Complex64::new(g2.re - o.g3, 0.0))
        }
        FunctionalKind::PeGinvariant => {
            let modulus = g1.norm();
            let mut grad = c2 * Complex64::new(0.5 * modulus, 0.0) - c1 * Complex64::new(0.5, 0.0);
            if modulus > MODULUS_GUARD {
                grad += c1 * (g1 * (g2.re / (2.0 * modulus)));
            }
            match spec.pe_cost {
                PeCost::Raw => Ok(grad),
                PeCost::Saturated => {
                    if super::closest_in_pe(gate)? {
                        Ok(Matrix4c::zeros())
                    } else {
                        let d = g2.re * modulus - g1.re;
                        Ok(grad * Complex64::new(d.signum(), 0.0))
                    }
                }
            }
        }
        other => Err(Error::FunctionalMismatch {
            kind: other.to_string(),
            reason: "analytic gradients exist only for invariant-space kinds".into(),
        }),
    }
}

/// `dJ~/dU~*` including the population-loss term.
pub fn gate_gradient(gate: &Gate, spec: &FunctionalSpec) -> Result<Matrix4c> {
    let mut grad = gate.0 * Complex64::new(-spec.loss_coefficient() / 4.0, 0.0);
    if spec.w != 0.0 {
        grad += core_gradient(gate, spec)? * Complex64::new(spec.w, 0.0);
    }
    Ok(grad)
}

/// Adjoint boundary states `chi_k(T) = -dJ~/d<phi_k(T)|` for the propagated
/// logical basis states (columns of `phi_t`). Only logical components are nonzero.
pub fn j_gradient_states(
    phi_t: &CMatrix,
    logical: &[usize; 4],
    spec: &FunctionalSpec,
) -> Result<CMatrix> {
    if !spec.kind.is_ginvariant() {
        return Err(Error::FunctionalMismatch {
            kind: spec.kind.to_string(),
            reason: "adjoint states need an invariant-space functional".into(),
        });
    }
    let gate = gate_from_states(phi_t, logical)?;
    let grad = gate_gradient(&gate, spec)?;
    let mut chi = CMatrix::zeros(phi_t.nrows(), 4);
    for k in 0..4 {
        for (a, &row) in logical.iter().enumerate() {
            chi[(row, k)] = -grad[(a, k)];
        }
    }
    Ok(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::weyl::{canonical_gate, j_tilde, NamedTarget, Target, WeylPoint};

    fn fd_gradient(gate: &Gate, spec: &FunctionalSpec, h: f64) -> Matrix4c {
        let mut out = Matrix4c::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let mut fx = [0.0; 2];
                let mut fy = [0.0; 2];
                for (s, sign) in [1.0, -1.0].iter().enumerate() {
                    let mut g = *gate;
                    g.0[(a, b)] += c(sign * h, 0.0);
                    fx[s] = j_tilde(&g, spec).unwrap();
                    let mut g = *gate;
                    g.0[(a, b)] += c(0.0, sign * h);
                    fy[s] = j_tilde(&g, spec).unwrap();
                }
                let dx = (fx[0] - fx[1]) / (2.0 * h);
                let dy = (fy[0] - fy[1]) / (2.0 * h);
                out[(a, b)] = c(dx, dy) * 0.5;
            }
        }
        out
    }

    fn sample_gate() -> Gate {
        let g = canonical_gate(&WeylPoint::new(0.9, 0.5, 0.2));
        let mut m = g.0 * c(0.97, 0.0);
        m[(0, 1)] += c(0.03, -0.02);
        m[(2, 3)] += c(-0.01, 0.04);
        Gate(m)
    }

    #[test]
    fn li_gradient_matches_finite_differences() {
        let spec = FunctionalSpec::li_ginvariant(Target::Named(NamedTarget::Cnot), 0.7).unwrap();
        let g = sample_gate();
        let a = gate_gradient(&g, &spec).unwrap();
        let f = fd_gradient(&g, &spec, 1e-6);
        assert!((a - f).norm() / a.norm() < 1e-7, "{}", (a - f).norm());
    }

    #[test]
    fn pe_gradient_matches_finite_differences() {
        let spec = FunctionalSpec::pe_ginvariant(0.6)
            .unwrap()
            .with_pe_cost(PeCost::Raw);
        let g = sample_gate();
        let a = gate_gradient(&g, &spec).unwrap();
        let f = fd_gradient(&g, &spec, 1e-6);
        assert!((a - f).norm() / a.norm() < 1e-7);
    }

    #[test]
    fn loss_only_costate_is_quarter_gate() {
        let spec = FunctionalSpec::pe_ginvariant(0.0).unwrap();
        let mut phi = CMatrix::zeros(6, 4);
        let g = sample_gate();
        let logical = [0, 2, 3, 5];
        for k in 0..4 {
            for a in 0..4 {
                phi[(logical[a], k)] = g.0[(a, k)];
            }
            phi[(1, k)] = c(0.1, 0.0);
        }
        let chi = j_gradient_states(&phi, &logical, &spec).unwrap();
        for k in 0..4 {
            for a in 0..4 {
                assert!((chi[(logical[a], k)] - g.0[(a, k)] * 0.25).norm() < 1e-15);
            }
            assert_eq!(chi[(1, k)], c(0.0, 0.0));
            assert_eq!(chi[(4, k)], c(0.0, 0.0));
        }
    }

    #[test]
    fn gradient_vanishes_at_target() {
        let spec = FunctionalSpec::li_ginvariant(Target::Named(NamedTarget::B), 1.0).unwrap();
        let g = NamedTarget::B.gate();
        assert!(gate_gradient(&g, &spec).unwrap().norm() < 1e-12);
    }

    #[test]
    fn rejects_cspace_kinds() {
        let phi = CMatrix::identity(4, 4);
        assert!(j_gradient_states(&phi, &[0, 1, 2, 3], &FunctionalSpec::pe_cspace()).is_err());
    }
}
