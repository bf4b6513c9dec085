//! Two-qubit gate geometry: magic basis, local invariants, Weyl chamber
//! coordinates and the perfect-entangler polyhedron.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, Gate, Matrix4c, I, ZERO};

pub mod concurrence;
pub mod functionals;
pub mod gradient;
pub mod targets;

pub use concurrence::gate_concurrence;
pub use functionals::*;
pub use gradient::j_gradient_states;
pub use targets::NamedTarget;

/// Minimum `|det U|` for the invariants to be evaluated.
pub const DET_THRESHOLD: f64 = 1e-6;
const UNITARY_TOL: f64 = 1e-8;
/// Tolerance for inclusive membership tests on chamber planes.
pub const PLANE_TOL: f64 = 1e-10;
const GROUND_PLANE_TOL: f64 = 1e-9;

/// Canonical coordinates `(c1, c2, c3)` in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylPoint {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl WeylPoint {
    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// Whether the point satisfies the chamber constraints up to `tol`.
    pub fn in_chamber(&self, tol: f64) -> bool {
        chamber_violation(self) <= tol
    }

    pub fn distance(&self, other: &WeylPoint) -> f64 {
        ((self.c1 - other.c1).powi(2) + (self.c2 - other.c2).powi(2) + (self.c3 - other.c3).powi(2))
            .sqrt()
    }
}

/// Local invariants `(g1, g2, g3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalInvariants {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl LocalInvariants {
    pub const fn new(g1: f64, g2: f64, g3: f64) -> Self {
        Self { g1, g2, g3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.g1, self.g2, self.g3]
    }

    pub fn max_diff(&self, other: &LocalInvariants) -> f64 {
        (self.g1 - other.g1)
            .abs()
            .max((self.g2 - other.g2).abs())
            .max((self.g3 - other.g3).abs())
    }
}

/// Magic basis `Q`; its columns are `Phi+`, `i Psi+`, `Psi-`, `i Phi-`.
pub fn magic_basis() -> Matrix4c {
    let s = c(FRAC_1_SQRT_2, 0.0);
    let si = I * FRAC_1_SQRT_2;
    Matrix4c::from_row_slice(&[
        s, ZERO, ZERO, si, //
        ZERO, si, s, ZERO, //
        ZERO, si, -s, ZERO, //
        s, ZERO, ZERO, -si,
    ])
}

/// `U_B = Q^dagger U Q`.
pub fn to_magic(gate: &Gate) -> Matrix4c {
    let q = magic_basis();
    q.adjoint() * gate.0 * q
}

pub fn from_magic(ub: &Matrix4c) -> Gate {
    let q = magic_basis();
    Gate(q * ub * q.adjoint())
}

/// Complex invariants `G1 = tr^2(m) / (16 det U)` and
/// `G2 = (tr^2(m) - tr(m^2)) / (4 det U)` with `m = U_B^T U_B`.
pub fn complex_invariants(gate: &Gate) -> Result<(Complex64, Complex64)> {
    let det = gate.det();
    if !(det.norm() > DET_THRESHOLD) {
        return Err(Error::DeterminantTooSmall { det: det.norm() });
    }
    let ub = to_magic(gate);
    let m = ub.transpose() * ub;
    let tr = m.trace();
    let tr2 = (m * m).trace();
    let g1 = tr * tr / (16.0 * det);
    let g2 = (tr * tr - tr2) / (4.0 * det);
    Ok((g1, g2))
}

/// `(g1, g2, g3) = (Re G1, Im G1, Re G2)`. For unitary input `G2` is real.
pub fn local_invariants(gate: &Gate) -> Result<LocalInvariants> {
    let (g1, g2) = complex_invariants(gate)?;
    Ok(LocalInvariants::new(g1.re, g1.im, g2.re))
}

/// Eigenphases of the canonical gate in the magic basis.
fn lambdas(p: &WeylPoint) -> [f64; 4] {
    let WeylPoint { c1, c2, c3 } = *p;
    [c1 - c2 + c3, c1 + c2 - c3, -c1 - c2 - c3, -c1 + c2 + c3]
}

/// `exp(i/2 (c1 XX + c2 YY + c3 ZZ))`.
pub fn canonical_gate(p: &WeylPoint) -> Gate {
    let l = lambdas(p);
    let d = Matrix4c::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| {
        Complex64::from_polar(1.0, l[k] / 2.0)
    }));
    from_magic(&d)
}

fn chamber_violation(p: &WeylPoint) -> f64 {
    let WeylPoint { c1, c2, c3 } = *p;
    let v = [-c3, c3 - c2, c2 - c1, c1 - PI, c1 + c2 - PI];
    v.iter().fold(0.0_f64, |acc, &x| acc.max(x))
}

fn reduce_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    // rem_euclid can return PI itself for tiny negative inputs
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Eigenvalues of the unitary symmetric matrix `m`. Its real and imaginary
/// parts are commuting real symmetric matrices, so a generic real combination
/// shares the orthogonal eigenbasis.
fn symmetric_unitary_eigenvalues(m: &Matrix4c) -> [Complex64; 4] {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, [Complex64; 4])> = None;
    for t in [0.541_324_7, 1.732_050_8, -0.817_236_4] {
        let eig = SymmetricEigen::new(re + im * t);
        let o = eig.eigenvectors.map(|x| c(x, 0.0));
        let d = o.transpose() * m * o;
        let mut off = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        let vals = [d[(0, 0)], d[(1, 1)], d[(2, 2)], d[(3, 3)]];
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, vals));
        }
        if off < 1e-12 {
            break;
        }
    }
    best.expect("at least one trial").1
}

const PERMUTATIONS: [[usize; 4]; 24] = {
    let mut out = [[0usize; 4]; 24];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && b != c && a != c {
                    let d = 6 - a - b - c;
                    out[n] = [a, b, c, d];
                    n += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// Canonical chamber representative of a unitary gate.
pub fn weyl_coordinates(gate: &Gate) -> Result<WeylPoint> {
    let defect = gate.unitarity_defect();
    if !(defect < UNITARY_TOL) {
        return Err(Error::NotUnitary { deviation: defect });
    }
    let ub = to_magic(gate);
    let m = ub.transpose() * ub;
    let det_sqrt = gate.det().sqrt();
    let m = m / det_sqrt;
    let eig = symmetric_unitary_eigenvalues(&m);
    let theta: Vec<f64> = eig.iter().map(|z| z.arg()).collect();

    let mut best: Option<(f64, WeylPoint)> = None;
    let flips = [[false, false, false], [true, true, false], [true, false, true], [false, true, true]];
    for perm in PERMUTATIONS.iter() {
        // theta[perm[k]] plays the role of lambda_{k+1}
        let (l1, l2, l4) = (theta[perm[0]], theta[perm[1]], theta[perm[3]]);
        let base = [(l1 + l2) / 2.0, (l2 + l4) / 2.0, (l1 + l4) / 2.0];
        for flip in flips.iter() {
            let mut cc = [0.0; 3];
            for k in 0..3 {
                let v = if flip[k] { PI - base[k] } else { base[k] };
                cc[k] = reduce_pi(v);
            }
            let p = WeylPoint::new(cc[0], cc[1], cc[2]);
            let viol = chamber_violation(&p);
            let better = match &best {
                None => true,
                Some((bv, bp)) => {
                    viol < bv - 1e-13 || ((viol - bv).abs() <= 1e-13 && p.c1 < bp.c1)
                }
            };
            if better {
                best = Some((viol, p));
            }
        }
    }
    let (_, p) = best.expect("candidates enumerated");
    Ok(clamp_to_chamber(p))
}

fn clamp_to_chamber(p: WeylPoint) -> WeylPoint {
    let mut c3 = p.c3.max(0.0);
    let mut c2 = p.c2.max(c3);
    let mut c1 = p.c1.max(c2).min(PI);
    if c2 > PI - c1 {
        c2 = PI - c1;
    }
    c3 = c3.min(c2);
    if c3 < GROUND_PLANE_TOL {
        c3 = 0.0;
        c1 = c1.min(PI - c1).max(c2);
    }
    WeylPoint::new(c1, c2, c3)
}

/// The polyhedron bounded by `c1 + c2 = pi/2`, `c2 + c3 = pi/2` and
/// `c1 - c2 = pi/2`, boundaries included.
pub fn in_pe_polyhedron(p: &WeylPoint) -> bool {
    p.c1 + p.c2 >= FRAC_PI_2 - PLANE_TOL
        && p.c2 + p.c3 <= FRAC_PI_2 + PLANE_TOL
        && p.c1 - p.c2 <= FRAC_PI_2 + PLANE_TOL
}

/// Single-qubit unitary from ZYZ Euler angles.
pub fn su2(alpha: f64, beta: f64, gamma: f64) -> nalgebra::Matrix2<Complex64> {
    let rz = |a: f64| {
        nalgebra::Matrix2::new(
            Complex64::from_polar(1.0, -a / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, a / 2.0),
        )
    };
    let ry = nalgebra::Matrix2::new(
        c((beta / 2.0).cos(), 0.0),
        c(-(beta / 2.0).sin(), 0.0),
        c((beta / 2.0).sin(), 0.0),
        c((beta / 2.0).cos(), 0.0),
    );
    rz(alpha) * ry * rz(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expi_step, kron, pauli, Operator};

    fn close_inv(a: LocalInvariants, b: [f64; 3], tol: f64) -> bool {
        a.max_diff(&LocalInvariants::new(b[0], b[1], b[2])) < tol
    }

    fn close_point(a: WeylPoint, b: [f64; 3], tol: f64) -> bool {
        a.distance(&WeylPoint::new(b[0], b[1], b[2])) < tol
    }

    #[test]
    fn magic_basis_is_unitary() {
        assert!(Gate(magic_basis()).is_unitary(1e-15));
    }

    #[test]
    fn canonical_gate_matches_exponential() {
        let p = WeylPoint::new(0.7, 0.4, 0.1);
        let h = (kron(&pauli::x(), &pauli::x()).map(|z| z * p.c1)
            + kron(&pauli::y(), &pauli::y()).map(|z| z * p.c2)
            + kron(&pauli::z(), &pauli::z()).map(|z| z * p.c3))
        .map(|z| z * -0.5);
        let u = expi_step(&Operator::hermitian(h).unwrap(), 1.0).unwrap();
        let g = canonical_gate(&p);
        assert!((g.to_dmatrix() - u).norm() < 1e-12);
        assert!((canonical_gate(&WeylPoint::new(0.0, 0.0, 0.0)).0 - Matrix4c::identity()).norm() < 1e-15);
        assert!(g.is_unitary(1e-12));
    }

    #[test]
    fn invariants_of_standard_gates() {
        assert!(close_inv(local_invariants(&Gate::identity()).unwrap(), [1.0, 0.0, 3.0], 1e-12));
        assert!(close_inv(local_invariants(&Gate::cnot()).unwrap(), [0.0, 0.0, 1.0], 1e-12));
        assert!(close_inv(local_invariants(&Gate::cz()).unwrap(), [0.0, 0.0, 1.0], 1e-12));
        assert!(close_inv(local_invariants(&Gate::swap()).unwrap(), [-1.0, 0.0, -3.0], 1e-12));
        let q = canonical_gate(&WeylPoint::new(PI / 4.0, PI / 4.0, 0.0));
        assert!(close_inv(local_invariants(&q).unwrap(), [0.25, 0.0, 1.0], 1e-12));
        let b = canonical_gate(&WeylPoint::new(PI / 2.0, PI / 4.0, 0.0));
        assert!(close_inv(local_invariants(&b).unwrap(), [0.0, 0.0, 0.0], 1e-12));
        let l = canonical_gate(&WeylPoint::new(PI / 2.0, 0.0, 0.0));
        assert!(close_inv(local_invariants(&l).unwrap(), [0.0, 0.0, 1.0], 1e-12));
    }

    #[test]
    fn invariants_need_nonzero_det() {
        let mut g = Gate::identity();
        g.0[(0, 0)] = ZERO;
        assert!(matches!(
            local_invariants(&g),
            Err(Error::DeterminantTooSmall { .. })
        ));
    }

    #[test]
    fn coordinates_of_standard_gates() {
        let tol = 1e-10;
        assert!(close_point(weyl_coordinates(&Gate::identity()).unwrap(), [0.0, 0.0, 0.0], tol));
        assert!(close_point(weyl_coordinates(&Gate::cnot()).unwrap(), [PI / 2.0, 0.0, 0.0], tol));
        assert!(close_point(weyl_coordinates(&Gate::cz()).unwrap(), [PI / 2.0, 0.0, 0.0], tol));
        let s = PI / 2.0;
        assert!(close_point(weyl_coordinates(&Gate::swap()).unwrap(), [s, s, s], tol));
        let q = PI / 4.0;
        assert!(close_point(weyl_coordinates(&Gate::sqrt_swap()).unwrap(), [q, q, q], tol));
        let other = weyl_coordinates(&Gate::sqrt_swap().adjoint()).unwrap();
        assert!(close_point(other, [3.0 * q, q, q], tol));
        let sq = Gate::sqrt_swap().mul(&Gate::sqrt_swap());
        assert!((sq.0 - Gate::swap().0).norm() < 1e-14);
    }

    #[test]
    fn coordinates_reject_non_unitary() {
        assert!(matches!(
            weyl_coordinates(&Gate::identity().scale(c(0.9, 0.0))),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn coordinates_round_trip_interior() {
        let p = WeylPoint::new(1.1, 0.6, 0.3);
        let k1 = Gate::local(&su2(0.3, 1.2, -0.5), &su2(2.0, 0.1, 0.7));
        let k2 = Gate::local(&su2(-1.3, 0.8, 0.2), &su2(0.4, 2.5, 1.9));
        let u = k1.mul(&canonical_gate(&p)).mul(&k2).scale(Complex64::from_polar(1.0, 0.37));
        let got = weyl_coordinates(&u).unwrap();
        assert!(got.distance(&p) < 1e-9, "{got:?}");
    }

    #[test]
    fn ground_plane_mirror_picks_smaller_c1() {
        let m = canonical_gate(&WeylPoint::new(3.0 * PI / 4.0, PI / 4.0, 0.0));
        let got = weyl_coordinates(&m).unwrap();
        assert!(close_point(got, [PI / 4.0, PI / 4.0, 0.0], 1e-10), "{got:?}");
    }

    #[test]
    fn polyhedron_membership() {
        assert!(in_pe_polyhedron(&WeylPoint::new(PI / 2.0, 0.0, 0.0)));
        assert!(!in_pe_polyhedron(&WeylPoint::new(0.0, 0.0, 0.0)));
        let s = PI / 2.0;
        assert!(!in_pe_polyhedron(&WeylPoint::new(s, s, s)));
        let q = PI / 4.0;
        assert!(in_pe_polyhedron(&WeylPoint::new(q, q, q)));
        assert!(in_pe_polyhedron(&WeylPoint::new(3.0 * q, q, q)));
    }
}
