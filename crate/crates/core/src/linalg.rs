//! Dense complex linear algebra for small Hilbert spaces: operators, two-qubit
//! gates, the propagator kernel, and subspace projection.
//!
//! Basis ordering is tensor-product `|q1 q2>` with the first (left) subsystem
//! as the slowest index. Units are `hbar = 1`, energies in rad/ns, times in ns.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type Matrix4c = Matrix4<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

const HERMITIAN_TOL: f64 = 1e-12;

/// Singular values below this mark a projected gate as having lost a full
/// logical direction.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry of `|M - M^dagger|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Kronecker product `a (x) b` with `a` the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub mod pauli {
    use super::*;

    pub fn identity(n: usize) -> CMatrix {
        CMatrix::identity(n, n)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    /// `diag(1, -1)`: `|0>` is the `+1` eigenstate.
    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
}

/// A square operator on the model Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    /// Wraps a matrix that must be Hermitian to `1e-12`.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let deviation = hermiticity_defect(&matrix);
        if deviation >= HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix,
            hermitian: true,
        })
    }

    pub fn general(matrix: CMatrix) -> Self {
        Self {
            matrix,
            hermitian: false,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Whether the matrix has no imaginary part at all.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * s),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        }
    }
}

/// `exp(-i H dt)` via the Hermitian eigendecomposition `H = Q diag(l) Q^dagger`.
pub fn expi_step(h: &Operator, dt: f64) -> Result<CMatrix> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermiticity_defect(h.matrix()),
        });
    }
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt} is not finite")));
    }
    Ok(if h.is_real() {
        expi_real_symmetric(&h.matrix().map(|z| z.re), dt)
    } else {
        expi_hermitian(h.matrix(), dt)
    })
}

/// Propagator kernel for a real symmetric generator.
pub(crate) fn expi_real_symmetric(h: &DMatrix<f64>, dt: f64) -> CMatrix {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -l * dt))
        .collect();
    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = ZERO;
            for (m, p) in phases.iter().enumerate() {
                acc += p * (q[(j, m)] * q[(k, m)]);
            }
            u[(j, k)] = acc;
        }
    }
    u
}

pub(crate) fn expi_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (m, &l) in eig.eigenvalues.iter().enumerate() {
        let p = Complex64::from_polar(1.0, -l * dt);
        for j in 0..n {
            scaled[(j, m)] *= p;
        }
    }
    scaled * q.adjoint()
}

/// A 4x4 matrix on the logical two-qubit subspace. Not necessarily unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate(pub Matrix4c);

impl Gate {
    pub fn from_row_slice(entries: &[Complex64]) -> Self {
        Gate(Matrix4c::from_row_slice(entries))
    }

    pub fn from_real_rows(rows: [[f64; 4]; 4]) -> Self {
        Gate(Matrix4c::from_fn(|i, j| c(rows[i][j], 0.0)))
    }

    pub fn from_dmatrix(m: &CMatrix) -> Result<Self> {
        if m.nrows() != 4 || m.ncols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: m.nrows().max(m.ncols()),
            });
        }
        Ok(Gate(Matrix4c::from_fn(|i, j| m[(i, j)])))
    }

    pub fn to_dmatrix(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| self.0[(i, j)])
    }

    pub fn identity() -> Self {
        Gate(Matrix4c::identity())
    }

    pub fn cnot() -> Self {
        Self::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
    }

    pub fn cz() -> Self {
        Self::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ])
    }

    pub fn swap() -> Self {
        Self::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Square root of SWAP on the canonical path `(c, c, c)`, `c` from 0 to pi/2.
    /// Its adjoint is the other root, with the `(1+i)/2` diagonal block.
    pub fn sqrt_swap() -> Self {
        let a = c(0.5, -0.5);
        let b = c(0.5, 0.5);
        Self::from_row_slice(&[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, a, b, ZERO, //
            ZERO, b, a, ZERO, //
            ZERO, ZERO, ZERO, ONE,
        ])
    }

    /// Tensor product `a (x) b` of two single-qubit operators.
    pub fn local(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> Self {
        Gate(Matrix4c::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)]))
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Gate(self.0.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Gate(self.0 * s)
    }

    pub fn mul(&self, other: &Gate) -> Self {
        Gate(self.0 * other.0)
    }

    pub fn det(&self) -> Complex64 {
        self.0.determinant()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Max entry of `|G^dagger G - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix4c::identity())
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// How `||U~ - U||` is measured in the corrected fidelities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DistanceNorm {
    /// Frobenius norm divided by 2 (`sqrt(dim)` for dim 4).
    #[default]
    HalfFrobenius,
    Frobenius,
    /// Largest singular value of the difference.
    Spectral,
}

impl DistanceNorm {
    pub fn measure(&self, diff: &Matrix4c) -> f64 {
        match self {
            DistanceNorm::HalfFrobenius => diff.norm() / 2.0,
            DistanceNorm::Frobenius => diff.norm(),
            DistanceNorm::Spectral => diff
                .singular_values()
                .iter()
                .fold(0.0_f64, |acc, &s| acc.max(s)),
        }
    }
}

/// Unitary nearest to `gate`, from the SVD `gate = V S W^dagger` as `V W^dagger`,
/// together with the distance `||gate - U||` (half Frobenius).
pub fn closest_unitary(gate: &Gate) -> Result<(Gate, f64)> {
    closest_unitary_with(gate, DistanceNorm::HalfFrobenius)
}

pub fn closest_unitary_with(gate: &Gate, norm: DistanceNorm) -> Result<(Gate, f64)> {
    let svd = gate.0.svd(true, true);
    let smallest = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |acc, &s| acc.min(s));
    if !(smallest > SINGULAR_THRESHOLD) {
        return Err(Error::Singular {
            smallest,
            threshold: SINGULAR_THRESHOLD,
        });
    }
    let (Some(v), Some(w_adj)) = (svd.u, svd.v_t) else {
        unreachable!("svd requested both unitary factors")
    };
    let u = v * w_adj;
    let dist = norm.measure(&(gate.0 - u));
    Ok((Gate(u), dist))
}

/// `1 - tr(G^dagger G)/4`: population that left the logical subspace,
/// averaged over the four logical basis states.
pub fn population_loss(gate: &Gate) -> f64 {
    1.0 - gate.0.norm_squared() / 4.0
}

fn check_indices(dim: usize, indices: &[usize]) -> Result<()> {
    for (a, &i) in indices.iter().enumerate() {
        if i >= dim {
            return Err(Error::InvalidIndices(format!(
                "index {i} out of range for dimension {dim}"
            )));
        }
        if indices[..a].contains(&i) {
            return Err(Error::InvalidIndices(format!("index {i} appears twice")));
        }
    }
    Ok(())
}

pub(crate) fn validate_indices(dim: usize, indices: &[usize]) -> Result<()> {
    check_indices(dim, indices)
}

/// 4x4 block of a full evolution matrix at the logical rows and columns.
pub fn project_logical(full: &CMatrix, logical: &[usize]) -> Result<Gate> {
    if logical.len() != 4 {
        return Err(Error::InvalidIndices(format!(
            "need 4 logical indices, got {}",
            logical.len()
        )));
    }
    if !full.is_square() {
        return Err(Error::DimensionMismatch {
            expected: full.nrows(),
            got: full.ncols(),
        });
    }
    check_indices(full.nrows(), logical)?;
    Ok(Gate(Matrix4c::from_fn(|a, b| full[(logical[a], logical[b])])))
}

/// Gate from propagated logical basis states: column `k` of `states` is the
/// image of `|logical[k]>`, and row `a` of the result picks component `logical[a]`.
pub fn gate_from_states(states: &CMatrix, logical: &[usize]) -> Result<Gate> {
    if logical.len() != 4 || states.ncols() != 4 {
        return Err(Error::InvalidIndices(format!(
            "need 4 logical states, got {} indices and {} states",
            logical.len(),
            states.ncols()
        )));
    }
    check_indices(states.nrows(), logical)?;
    Ok(Gate(Matrix4c::from_fn(|a, k| states[(logical[a], k)])))
}

/// Columns `|logical[k]>` of the full-space identity.
pub fn logical_basis_states(dim: usize, logical: &[usize]) -> Result<CMatrix> {
    check_indices(dim, logical)?;
    let mut states = CMatrix::zeros(dim, logical.len());
    for (k, &i) in logical.iter().enumerate() {
        states[(i, k)] = ONE;
    }
    Ok(states)
}
