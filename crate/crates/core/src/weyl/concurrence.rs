//! Entangling power of a gate: maximal concurrence over product inputs.

use std::f64::consts::PI;

use nalgebra::Vector4;
use num_complex::Complex64;

use crate::crab::simplex::{minimize, SimplexConfig};
use crate::linalg::{c, Gate};

const STARTS: usize = 64;

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn qubit(theta: f64, phi: f64) -> [Complex64; 2] {
    [
        c((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// `|psi^T (sy x sy) psi|` for `psi = U (a x b)`, with `(theta, phi)` Bloch
/// angles for `a` and `b` packed into `x`.
pub fn product_concurrence(gate: &Gate, x: &[f64]) -> f64 {
    let a = qubit(x[0], x[1]);
    let b = qubit(x[2], x[3]);
    let input = Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]);
    let psi = gate.0 * input;
    // sy x sy is the antidiagonal (-1, 1, 1, -1)
    let v = -psi[0] * psi[3] * 2.0 + psi[1] * psi[2] * 2.0;
    v.norm()
}

/// Largest concurrence `U` produces from a product state. Quasi-random
/// multi-start followed by simplex refinement of each start.
pub fn gate_concurrence(gate: &Gate) -> f64 {
    let cfg = SimplexConfig {
        max_evals: 400,
        f_tol: 1e-12,
        x_tol: 1e-9,
        ..Default::default()
    };
    let mut best = 0.0_f64;
    for i in 1..=STARTS {
        let x0 = [
            PI * radical_inverse(i, 2),
            2.0 * PI * radical_inverse(i, 3),
            PI * radical_inverse(i, 5),
            2.0 * PI * radical_inverse(i, 7),
        ];
        best = best.max(product_concurrence(gate, &x0));
        if best >= 1.0 - 1e-12 {
            break;
        }
        let r = minimize(
            |x| -product_concurrence(gate, x),
            &x0,
            &[0.3, 0.6, 0.3, 0.6],
            &cfg,
            Some(-1.0 + 1e-12),
        )
        .expect("static simplex configuration is valid");
        best = best.max(-r.f);
        if best >= 1.0 - 1e-12 {
            break;
        }
    }
    best.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{canonical_gate, WeylPoint};

    #[test]
    fn identity_does_not_entangle() {
        assert!(gate_concurrence(&Gate::identity()) < 1e-12);
        assert!(gate_concurrence(&Gate::swap()) < 1e-12);
    }

    #[test]
    fn cnot_makes_bell_states() {
        // |+0> -> Bell state
        let x = [PI / 2.0, 0.0, 0.0, 0.0];
        assert!((product_concurrence(&Gate::cnot(), &x) - 1.0).abs() < 1e-14);
        assert!((gate_concurrence(&Gate::cnot()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_entangler() {
        // known value for (c, 0, 0): sin(c)
        let g = canonical_gate(&WeylPoint::new(0.4, 0.0, 0.0));
        assert!((gate_concurrence(&g) - 0.4_f64.sin()).abs() < 1e-6);
    }
}
