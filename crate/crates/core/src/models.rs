//! Drift and control operators for the supported physical models, plus a
//! dynamical Lie algebra rank computation for controllability checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, kron, pauli, validate_indices, CMatrix, Operator, ONE};

/// `H(t) = drift + sum_m u_m(t) controls[m]` on a `dim`-dimensional space with
/// a designated four-dimensional logical subspace.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    drift: Operator,
    controls: Vec<(Operator, String)>,
    logical_indices: [usize; 4],
    basis_labels: Vec<String>,
    // Real parts of drift and controls when every operator is real.
    real: Option<(DMatrix<f64>, Vec<DMatrix<f64>>)>,
}

impl ModelSpec {
    pub fn new(
        drift: Operator,
        controls: Vec<(Operator, String)>,
        logical_indices: [usize; 4],
        basis_labels: Vec<String>,
    ) -> Result<Self> {
        let dim = drift.dim();
        if !drift.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: crate::linalg::hermiticity_defect(drift.matrix()),
            });
        }
        for (op, label) in &controls {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
            if !op.is_hermitian() {
                return Err(Error::InvalidParameter(format!(
                    "control {label} is not Hermitian"
                )));
            }
        }
        if basis_labels.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: basis_labels.len(),
            });
        }
        validate_indices(dim, &logical_indices)?;
        let real = if drift.is_real() && controls.iter().all(|(op, _)| op.is_real()) {
            Some((
                drift.matrix().map(|z| z.re),
                controls.iter().map(|(op, _)| op.matrix().map(|z| z.re)).collect(),
            ))
        } else {
            None
        };
        Ok(Self {
            drift,
            controls,
            logical_indices,
            basis_labels,
            real,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn drift(&self) -> &Operator {
        &self.drift
    }

    pub fn controls(&self) -> &[(Operator, String)] {
        &self.controls
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn control_labels(&self) -> Vec<String> {
        self.controls.iter().map(|(_, l)| l.clone()).collect()
    }

    pub fn logical_indices(&self) -> &[usize; 4] {
        &self.logical_indices
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub(crate) fn real_parts(&self) -> Option<&(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        self.real.as_ref()
    }

    /// `drift + sum_m amplitudes[m] controls[m]`.
    pub fn hamiltonian(&self, amplitudes: &[f64]) -> Result<Operator> {
        if amplitudes.len() != self.controls.len() {
            return Err(Error::DimensionMismatch {
                expected: self.controls.len(),
                got: amplitudes.len(),
            });
        }
        let mut h = self.drift.matrix().clone();
        for ((op, _), &a) in self.controls.iter().zip(amplitudes) {
            h += op.matrix().map(|z| z * a);
        }
        Operator::hermitian(h)
    }
}

fn herm(m: CMatrix) -> Operator {
    Operator::hermitian(m).expect("model operators are Hermitian by construction")
}

fn two_qubit_labels() -> Vec<String> {
    ["00", "01", "10", "11"].iter().map(|s| s.to_string()).collect()
}

fn ladder_labels(n: usize) -> Vec<String> {
    (0..n * n).map(|k| format!("{},{}", k / n, k % n)).collect()
}

fn ladder_logical(n: usize) -> [usize; 4] {
    [0, 1, n, n + 1]
}

/// Truncated annihilation operator, `<n|b|n+1> = sqrt(n+1)`.
pub fn annihilation(n: usize) -> CMatrix {
    let mut b = CMatrix::zeros(n, n);
    for k in 0..n.saturating_sub(1) {
        b[(k, k + 1)] = c(((k + 1) as f64).sqrt(), 0.0);
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenericParams {
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
}

/// Two qubits with `sum (w_a/2) sz_a` drift, a local drive `sx_1 + lambda sx_2`
/// and an exchange control `sx sx + sy sy`.
pub fn build_generic(p: &GenericParams) -> Result<ModelSpec> {
    for v in [p.omega1, p.omega2, p.lambda] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite parameter {v}")));
        }
    }
    let id = pauli::identity(2);
    let drift = kron(&pauli::z(), &id).map(|z| z * (p.omega1 / 2.0))
        + kron(&id, &pauli::z()).map(|z| z * (p.omega2 / 2.0));
    let local = kron(&pauli::x(), &id) + kron(&id, &pauli::x()).map(|z| z * p.lambda);
    let exchange = kron(&pauli::x(), &pauli::x()) + kron(&pauli::y(), &pauli::y());
    ModelSpec::new(
        herm(drift),
        vec![
            (herm(local), "u1".into()),
            (herm(exchange), "u2".into()),
        ],
        [0, 1, 2, 3],
        two_qubit_labels(),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NVParams {
    pub enable_delta_control: bool,
}

/// NV electron-nuclear spin pair in the rotating frame, on resonance.
/// Controls are `Omega_MW`, `Omega_RF` and optionally the detuning `Delta`.
pub fn build_nv(p: &NVParams) -> Result<ModelSpec> {
    let dim = 4;
    let mut mw = CMatrix::zeros(dim, dim);
    mw[(0, 2)] = c(0.5, 0.0);
    mw[(2, 0)] = c(0.5, 0.0);
    let mut rf = CMatrix::zeros(dim, dim);
    rf[(2, 3)] = c(0.5, 0.0);
    rf[(3, 2)] = c(0.5, 0.0);
    let mut controls = vec![(herm(mw), "omega_mw".into()), (herm(rf), "omega_rf".into())];
    if p.enable_delta_control {
        let mut d = CMatrix::zeros(dim, dim);
        d[(3, 3)] = ONE;
        controls.push((herm(d), "delta".into()));
    }
    ModelSpec::new(
        Operator::zeros(dim),
        controls,
        [0, 1, 2, 3],
        two_qubit_labels(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargeParams {
    /// Charging energy, rad/ns.
    pub e_c: f64,
    /// Offset charge of qubit 1 and qubit 2.
    pub n_g: [f64; 2],
    pub n_levels: usize,
    /// Drive the junction coupling with the same pulse as the local `E_J`.
    pub single_pulse: bool,
}

impl Default for ChargeParams {
    fn default() -> Self {
        Self {
            e_c: 2.0 * PI * 50.0,
            n_g: [1.0, 1.0],
            n_levels: 6,
            single_pulse: false,
        }
    }
}

/// Two Josephson charge qubits in the charge basis `|n1, n2>`, `n in 0..n_levels`,
/// coupled through a tunable junction. Logical states are charges 0 and 1.
pub fn build_charge(p: &ChargeParams) -> Result<ModelSpec> {
    let n = p.n_levels;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "charge model needs at least 2 levels, got {n}"
        )));
    }
    if !(p.e_c > 0.0) || !p.e_c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "charging energy must be positive, got {}",
            p.e_c
        )));
    }
    let id = pauli::identity(n);
    let charging = |ng: f64| {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(p.e_c * (i as f64 - ng).powi(2), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    };
    let drift = kron(&charging(p.n_g[0]), &id) + kron(&id, &charging(p.n_g[1]));

    let hop = CMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            c(-0.5, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let e_j = kron(&hop, &id) + kron(&id, &hop);

    // |n1, n2+1><n1+1, n2| + h.c.
    let dim = n * n;
    let mut e_jj = CMatrix::zeros(dim, dim);
    for n1 in 0..n - 1 {
        for n2 in 0..n - 1 {
            let a = n1 * n + (n2 + 1);
            let b = (n1 + 1) * n + n2;
            e_jj[(a, b)] += c(0.5, 0.0);
            e_jj[(b, a)] += c(0.5, 0.0);
        }
    }
    let controls = if p.single_pulse {
        vec![(herm(e_j + e_jj), "e_j".into())]
    } else {
        vec![(herm(e_j), "e_j".into()), (herm(e_jj), "e_jj".into())]
    };
    ModelSpec::new(herm(drift), controls, ladder_logical(n), ladder_labels(n))
}

/// Parameters of two dispersively coupled transmons. Frequencies in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmonParams {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub j_eff: f64,
    pub lambda: f64,
    pub n_levels: usize,
}

const GHZ: f64 = 2.0 * PI;
const MHZ: f64 = 2.0 * PI * 1e-3;

impl Default for TransmonParams {
    fn default() -> Self {
        Self {
            omega1: 4.380 * GHZ,
            omega2: 4.614 * GHZ,
            alpha1: -210.0 * MHZ,
            alpha2: -215.0 * MHZ,
            j_eff: -3.0 * MHZ,
            lambda: 1.03,
            n_levels: 3,
        }
    }
}

/// Two Duffing oscillators with exchange coupling and a common drive
/// `Omega(t) (b1 + b1^dag + lambda (b2 + b2^dag))`.
///
/// Level energies are `E(n) = omega n + (alpha/2) n (n - 1)`, so
/// `E(2) - 2 E(1) = alpha`. Truncating to two levels leaves
/// `-(omega_i/2) sz_i + (J/2)(sx sx + sy sy) + Omega (sx_1 + lambda sx_2)`
/// up to a constant.
pub fn build_transmon(p: &TransmonParams) -> Result<ModelSpec> {
    let n = p.n_levels;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "transmon model needs at least 2 levels, got {n}"
        )));
    }
    let id = pauli::identity(n);
    let b = annihilation(n);
    let duffing = |omega: f64, alpha: f64| {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let k = i as f64;
                c(omega * k + 0.5 * alpha * k * (k - 1.0), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    };
    let b1 = kron(&b, &id);
    let b2 = kron(&id, &b);
    let exchange = &b1.adjoint() * &b2 + &b1 * b2.adjoint();
    let drift = kron(&duffing(p.omega1, p.alpha1), &id)
        + kron(&id, &duffing(p.omega2, p.alpha2))
        + exchange.map(|z| z * p.j_eff);
    let drive = &b1 + b1.adjoint() + (&b2 + b2.adjoint()).map(|z| z * p.lambda);
    ModelSpec::new(
        herm(drift),
        vec![(herm(drive), "omega".into())],
        ladder_logical(n),
        ladder_labels(n),
    )
}

/// Effective exchange coupling after eliminating a dispersive cavity.
pub fn derive_jeff(g1: f64, g2: f64, omega1: f64, omega2: f64, omega_r: f64) -> Result<f64> {
    let d1 = omega1 - omega_r;
    let d2 = omega2 - omega_r;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::InvalidParameter(
            "qubit frequency equals cavity frequency".into(),
        ));
    }
    Ok(g1 * g2 / d1 + g1 * g2 / d2)
}

/// Result of a Lie closure computation: the real dimension and an
/// orthonormal (Hilbert-Schmidt) Hermitian traceless basis.
#[derive(Clone, Debug)]
pub struct LieClosure {
    pub dimension: usize,
    pub basis: Vec<CMatrix>,
}

const LIE_RANK_THRESHOLD: f64 = 1e-10;

fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn traceless(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let shift = m.trace() / (n as f64);
    m - CMatrix::identity(n, n) * shift
}

/// Dimension of the real Lie algebra generated by Hermitian `ops` under
/// `(A, B) -> i[A, B]`, restricted to traceless parts.
pub fn lie_closure_dimension(ops: &[Operator]) -> Result<LieClosure> {
    let Some(first) = ops.first() else {
        return Ok(LieClosure {
            dimension: 0,
            basis: Vec::new(),
        });
    };
    let dim = first.dim();
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: op.dim(),
            });
        }
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: crate::linalg::hermiticity_defect(op.matrix()),
            });
        }
    }
    let scale = ops
        .iter()
        .map(|op| op.matrix().norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut basis: Vec<CMatrix> = Vec::new();
    let try_add = |m: CMatrix, basis: &mut Vec<CMatrix>| -> bool {
        let mut r = traceless(&m);
        // two passes of Gram-Schmidt for numerical stability
        for _ in 0..2 {
            for e in basis.iter() {
                let p = hs_inner(e, &r);
                r -= e.map(|z| z * p);
            }
        }
        let norm = r.norm();
        if norm > LIE_RANK_THRESHOLD * scale {
            basis.push(r.map(|z| z / norm));
            true
        } else {
            false
        }
    };
    for op in ops {
        try_add(op.matrix().clone(), &mut basis);
    }
    let i = c(0.0, 1.0);
    let mut frontier = 0;
    while frontier < basis.len() {
        let a = basis[frontier].clone();
        let mut k = 0;
        while k <= frontier {
            let b = basis[k].clone();
            let bracket = (&a * &b - &b * &a).map(|z| z * i);
            try_add(bracket.map(|z| z / scale), &mut basis);
            k += 1;
        }
        frontier += 1;
    }
    Ok(LieClosure {
        dimension: basis.len(),
        basis,
    })
}
